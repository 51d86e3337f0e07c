// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};

use super::doc::{LayerDoc, NetworkDocument, RawLayer};
use super::fuse::fuse_residual_blocks;
use super::layer::{LayerKind, LayerOp, LayerSpec, Shape};
use super::GraphError;

/// A fused residual subgraph: everything strictly after `fork` up to and including `merge`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualBlock {
    pub merge: String,
    pub fork: String,
    pub members: Vec<String>,
}

/// A validated CNN graph with layers in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    name: String,
    layers: Vec<LayerSpec>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    residual_blocks: Vec<ResidualBlock>,
}

/// Parses and validates a JSON network document.
pub fn parse_network(source: &str) -> Result<NetworkGraph, GraphError> {
    let doc = NetworkDocument::from_json(source)?;
    NetworkGraph::from_document(&doc)
}

impl NetworkGraph {
    pub fn from_document(doc: &NetworkDocument) -> Result<Self, GraphError> {
        let fused = fuse_residual_blocks(doc)?;
        build(&fused)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer(&self, idx: usize) -> &LayerSpec {
        &self.layers[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.id == id)
    }

    pub fn preds(&self, idx: usize) -> &[usize] {
        &self.preds[idx]
    }

    pub fn succs(&self, idx: usize) -> &[usize] {
        &self.succs[idx]
    }

    pub fn residual_blocks(&self) -> &[ResidualBlock] {
        &self.residual_blocks
    }

    /// Edges as `(src_id, dst_id)` in topological order of the source.
    pub fn connections(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, ss) in self.succs.iter().enumerate() {
            for &j in ss {
                out.push((self.layers[i].id.clone(), self.layers[j].id.clone()));
            }
        }
        out
    }

    pub fn input_index(&self) -> usize {
        self.layers.iter().position(|l| l.kind() == LayerKind::Input).expect("validated graph has an input")
    }

    pub fn input_shape(&self) -> Shape {
        self.layers[self.input_index()].in_shape
    }

    /// Indices of conv layers in topological order; position `i` is gene `i` of an allocation.
    pub fn conv_indices(&self) -> Vec<usize> {
        (0..self.layers.len()).filter(|&i| self.layers[i].is_conv()).collect()
    }

    pub fn conv_count(&self) -> usize {
        self.layers.iter().filter(|l| l.is_conv()).count()
    }

    pub fn output_shape_of(&self, idx: usize) -> Shape {
        self.layers[idx].output_shape().expect("validated graph has non-degenerate shapes")
    }

    /// Canonical document: topological layer order, every shape and `fc_in` explicit.
    pub fn to_document(&self) -> NetworkDocument {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut d = LayerDoc::new(l.id.clone(), l.kind());
                match l.op {
                    LayerOp::Conv { filters, window } => {
                        d.filters = Some(filters);
                        d.kernel = Some(window.kernel);
                        d.stride = Some(window.stride);
                        d.padding = Some(window.padding);
                    }
                    LayerOp::Pool { window, .. } => {
                        d.kernel = Some(window.kernel);
                        d.stride = Some(window.stride);
                        d.padding = Some(window.padding);
                    }
                    LayerOp::FullyConnected { fc_in, fc_out } => {
                        d.fc_in = Some(fc_in);
                        d.fc_out = Some(fc_out);
                    }
                    _ => {}
                }
                d.in_shape = Some(l.in_shape);
                d
            })
            .collect();
        NetworkDocument { name: self.name.clone(), layers, connections: self.connections() }
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json_pretty()
    }

    /// All ancestors of `idx`, including itself.
    pub fn ancestors(&self, idx: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![idx];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.preds[n].iter().copied());
            }
        }
        seen
    }

    /// All descendants of `idx`, including itself.
    pub fn descendants(&self, idx: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![idx];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.succs[n].iter().copied());
            }
        }
        seen
    }
}

fn build(doc: &NetworkDocument) -> Result<NetworkGraph, GraphError> {
    let raws = doc.layers.iter().map(LayerDoc::to_raw).collect::<Result<Vec<_>, _>>()?;
    let n = raws.len();

    let mut index: HashMap<&str, usize> = HashMap::with_capacity(n);
    for (i, r) in raws.iter().enumerate() {
        if index.insert(r.id.as_str(), i).is_some() {
            return Err(GraphError::MalformedDocument(format!("duplicate layer id `{}`", r.id)));
        }
    }

    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    let mut seen_edges = BTreeSet::new();
    for (src, dst) in &doc.connections {
        let lookup = |id: &String| {
            index.get(id.as_str()).copied().ok_or_else(|| {
                GraphError::DanglingConnection(format!("connection ({src} -> {dst}) references unknown layer `{id}`"))
            })
        };
        let (s, d) = (lookup(src)?, lookup(dst)?);
        if s == d {
            return Err(GraphError::CyclicGraph(format!("self-loop on `{src}`")));
        }
        if !seen_edges.insert((s, d)) {
            return Err(GraphError::MalformedDocument(format!("duplicate connection ({src} -> {dst})")));
        }
        succs[s].push(d);
        preds[d].push(s);
    }

    let order = topo_order(&raws, &preds, &succs)?;
    check_arity(&raws, &preds, &succs)?;

    // position of each original index in topological order
    let mut rank = vec![0usize; n];
    for (pos, &orig) in order.iter().enumerate() {
        rank[orig] = pos;
    }
    let mut t_preds = vec![Vec::new(); n];
    let mut t_succs = vec![Vec::new(); n];
    for orig in 0..n {
        let mut p: Vec<usize> = preds[orig].iter().map(|&x| rank[x]).collect();
        let mut s: Vec<usize> = succs[orig].iter().map(|&x| rank[x]).collect();
        p.sort_unstable();
        s.sort_unstable();
        t_preds[rank[orig]] = p;
        t_succs[rank[orig]] = s;
    }
    let ordered: Vec<&RawLayer> = order.iter().map(|&i| &raws[i]).collect();

    let layers = propagate_shapes(&ordered, &t_preds)?;
    let mut g =
        NetworkGraph { name: doc.name.clone(), layers, preds: t_preds, succs: t_succs, residual_blocks: Vec::new() };
    g.residual_blocks = annotate_blocks(&g);
    Ok(g)
}

/// Kahn's algorithm, always releasing the lowest document index first so the order is stable.
fn topo_order(raws: &[RawLayer], preds: &[Vec<usize>], succs: &[Vec<usize>]) -> Result<Vec<usize>, GraphError> {
    let n = raws.len();
    let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &succs[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<&str> = (0..n).filter(|&i| indeg[i] > 0).map(|i| raws[i].id.as_str()).collect();
        return Err(GraphError::CyclicGraph(format!("cycle through layers {}", stuck.join(", "))));
    }
    Ok(order)
}

fn check_arity(raws: &[RawLayer], preds: &[Vec<usize>], succs: &[Vec<usize>]) -> Result<(), GraphError> {
    let inputs: Vec<usize> = (0..raws.len()).filter(|&i| matches!(raws[i].op, LayerOp::Input)).collect();
    if inputs.len() != 1 {
        return Err(GraphError::MalformedDocument(format!("expected exactly one Input layer, found {}", inputs.len())));
    }
    if !raws.iter().any(|r| matches!(r.op, LayerOp::Output)) {
        return Err(GraphError::MalformedDocument("no Output layer".into()));
    }
    for (i, r) in raws.iter().enumerate() {
        let (np, ns) = (preds[i].len(), succs[i].len());
        match r.op {
            LayerOp::Input if np > 0 => {
                return Err(GraphError::MalformedDocument(format!("input layer `{}` has producers", r.id)));
            }
            LayerOp::ResidualAdd if np > 2 => {
                return Err(GraphError::UnsupportedTopology(format!("ResidualAdd `{}` merges {} branches", r.id, np)));
            }
            LayerOp::ResidualAdd if np < 2 => {
                return Err(GraphError::DanglingConnection(format!(
                    "ResidualAdd `{}` needs two producers, has {}",
                    r.id, np
                )));
            }
            LayerOp::Input | LayerOp::ResidualAdd => {}
            _ if np == 0 => {
                return Err(GraphError::DanglingConnection(format!("layer `{}` has no producer", r.id)));
            }
            _ if np > 1 => {
                return Err(GraphError::UnsupportedTopology(format!("layer `{}` has {} producers", r.id, np)));
            }
            _ => {}
        }
        match r.op {
            LayerOp::Output if ns > 0 => {
                return Err(GraphError::MalformedDocument(format!("output layer `{}` has consumers", r.id)));
            }
            LayerOp::Output => {}
            _ if ns == 0 => {
                return Err(GraphError::DanglingConnection(format!("output of layer `{}` is never consumed", r.id)));
            }
            _ => {}
        }
    }
    Ok(())
}

fn propagate_shapes(ordered: &[&RawLayer], preds: &[Vec<usize>]) -> Result<Vec<LayerSpec>, GraphError> {
    let mut layers: Vec<LayerSpec> = Vec::with_capacity(ordered.len());
    let mut outs: Vec<Shape> = Vec::with_capacity(ordered.len());

    for (i, raw) in ordered.iter().enumerate() {
        let in_shape = match raw.op {
            LayerOp::Input => raw.declared_shape.expect("input shape checked during decode"),
            LayerOp::ResidualAdd => {
                let (a, b) = (outs[preds[i][0]], outs[preds[i][1]]);
                if a != b {
                    return Err(GraphError::ShapeMismatch {
                        layer: raw.id.clone(),
                        detail: format!("residual branches disagree: {a} vs {b}"),
                    });
                }
                a
            }
            _ => outs[preds[i][0]],
        };
        if let Some(declared) = raw.declared_shape {
            if declared != in_shape {
                return Err(GraphError::ShapeMismatch {
                    layer: raw.id.clone(),
                    detail: format!("declared in_shape {declared} but producer emits {in_shape}"),
                });
            }
        }
        let op = match raw.op {
            LayerOp::FullyConnected { fc_out, .. } => {
                let flat = in_shape.elements();
                if let Some(d) = raw.declared_fc_in {
                    if d != flat {
                        return Err(GraphError::ShapeMismatch {
                            layer: raw.id.clone(),
                            detail: format!("fc_in = {d} but flattened input has {flat} elements"),
                        });
                    }
                }
                LayerOp::FullyConnected { fc_in: flat, fc_out }
            }
            other => other,
        };
        let spec = LayerSpec { id: raw.id.clone(), op, in_shape };
        let out = spec
            .output_shape()
            .map_err(|e| GraphError::ShapeMismatch { layer: raw.id.clone(), detail: e.to_string() })?;
        layers.push(spec);
        outs.push(out);
    }
    Ok(layers)
}

fn annotate_blocks(g: &NetworkGraph) -> Vec<ResidualBlock> {
    let mut blocks = Vec::new();
    for (m, l) in g.layers.iter().enumerate() {
        if l.kind() != LayerKind::ResidualAdd {
            continue;
        }
        let (a, b) = (g.preds[m][0], g.preds[m][1]);
        let common: BTreeSet<usize> = g.ancestors(a).intersection(&g.ancestors(b)).copied().collect();
        let fork = *common.iter().next_back().expect("single-input DAG: branches share the input");
        let below = g.descendants(fork);
        let above = g.ancestors(m);
        let members = below.intersection(&above).filter(|&&x| x != fork).map(|&x| g.layers[x].id.clone()).collect();
        blocks.push(ResidualBlock { merge: l.id.clone(), fork: g.layers[fork].id.clone(), members });
    }
    blocks
}
