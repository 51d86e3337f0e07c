// SPDX-License-Identifier: Apache-2.0

use super::doc::{LayerDoc, NetworkDocument};
use super::graph::NetworkGraph;
use super::layer::{LayerKind, Shape};
use super::GraphError;

/// Builds sequential chains programmatically; each added layer consumes the previous one.
#[derive(Debug, Clone)]
pub struct SequentialBuilder {
    doc: NetworkDocument,
    last: String,
}

impl SequentialBuilder {
    pub fn new(name: impl Into<String>, input: Shape) -> Self {
        let mut l = LayerDoc::new("input", LayerKind::Input);
        l.in_shape = Some(input);
        Self {
            doc: NetworkDocument { name: name.into(), layers: vec![l], connections: Vec::new() },
            last: "input".into(),
        }
    }

    fn push(mut self, l: LayerDoc) -> Self {
        self.doc.connections.push((self.last.clone(), l.id.clone()));
        self.last = l.id.clone();
        self.doc.layers.push(l);
        self
    }

    pub fn conv(self, id: &str, filters: u64, kernel: u64, stride: u64, padding: u64) -> Self {
        let mut l = LayerDoc::new(id, LayerKind::Conv);
        l.filters = Some(filters);
        l.kernel = Some(kernel);
        l.stride = Some(stride);
        l.padding = Some(padding);
        self.push(l)
    }

    pub fn max_pool(self, id: &str, kernel: u64, stride: u64) -> Self {
        self.pool(id, LayerKind::MaxPool, kernel, stride)
    }

    pub fn avg_pool(self, id: &str, kernel: u64, stride: u64) -> Self {
        self.pool(id, LayerKind::AvgPool, kernel, stride)
    }

    fn pool(self, id: &str, kind: LayerKind, kernel: u64, stride: u64) -> Self {
        let mut l = LayerDoc::new(id, kind);
        l.kernel = Some(kernel);
        l.stride = Some(stride);
        l.padding = Some(0);
        self.push(l)
    }

    pub fn fc(self, id: &str, fc_out: u64) -> Self {
        let mut l = LayerDoc::new(id, LayerKind::FullyConnected);
        l.fc_out = Some(fc_out);
        self.push(l)
    }

    pub fn document(self) -> NetworkDocument {
        self.push(LayerDoc::new("output", LayerKind::Output)).doc
    }

    pub fn build(self) -> Result<NetworkGraph, GraphError> {
        NetworkGraph::from_document(&self.document())
    }
}

/// The `filters` ladder with 3x3 same-padded convs, each followed by a 2x2/2 max-pool, and a
/// fully connected classifier.
pub fn conv_pool_ladder(name: &str, input: Shape, filters: &[u64], classes: u64) -> Result<NetworkGraph, GraphError> {
    let mut b = SequentialBuilder::new(name, input);
    for (i, &n) in filters.iter().enumerate() {
        b = b.conv(&format!("conv{}", i + 1), n, 3, 1, 1).max_pool(&format!("pool{}", i + 1), 2, 2);
    }
    b.fc("fc", classes).build()
}

/// MNIST 8-16-32 reference network (28x28x1 input, 10 classes).
pub fn mnist_8_16_32() -> NetworkGraph {
    conv_pool_ladder("mnist_8_16_32", Shape::new(28, 28, 1), &[8, 16, 32], 10).expect("reference network is valid")
}
