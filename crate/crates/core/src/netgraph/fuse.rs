// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashSet};

use super::doc::{LayerDoc, NetworkDocument};
use super::layer::LayerKind;
use super::GraphError;

/// Rewrites every two-input convergence point into an explicit `ResidualAdd` layer.
///
/// A layer other than `ResidualAdd` with two producers gets a new `ResidualAdd`
/// inserted in front of it; explicit `ResidualAdd` layers are kept. Sequential
/// documents come back unchanged. Convergence of more than two branches is rejected.
pub fn fuse_residual_blocks(doc: &NetworkDocument) -> Result<NetworkDocument, GraphError> {
    let ids: HashSet<&str> = doc.layers.iter().map(|l| l.id.as_str()).collect();
    for (src, dst) in &doc.connections {
        for end in [src, dst] {
            if !ids.contains(end.as_str()) {
                return Err(GraphError::DanglingConnection(format!(
                    "connection ({src} -> {dst}) references unknown layer `{end}`"
                )));
            }
        }
    }

    let mut producers: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (_, dst)) in doc.connections.iter().enumerate() {
        producers.entry(dst.as_str()).or_default().push(i);
    }

    let mut out = doc.clone();
    let mut taken: HashSet<String> = doc.layers.iter().map(|l| l.id.clone()).collect();
    let mut inserted = 0usize;

    for layer in &doc.layers {
        let edges = producers.get(layer.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if edges.len() > 2 {
            return Err(GraphError::UnsupportedTopology(format!(
                "layer `{}` merges {} branches; only two-branch residual merges are supported",
                layer.id,
                edges.len()
            )));
        }
        if edges.len() < 2 || layer.kind == LayerKind::ResidualAdd {
            continue;
        }
        if layer.kind == LayerKind::Input {
            return Err(GraphError::MalformedDocument(format!("input layer `{}` has producers", layer.id)));
        }

        let mut add_id = format!("{}_add", layer.id);
        let mut n = 1;
        while taken.contains(&add_id) {
            n += 1;
            add_id = format!("{}_add{}", layer.id, n);
        }
        taken.insert(add_id.clone());

        for &e in edges {
            out.connections[e].1 = add_id.clone();
        }
        out.connections.push((add_id.clone(), layer.id.clone()));

        let pos = out.layers.iter().position(|l| l.id == layer.id).expect("layer present");
        out.layers.insert(pos, LayerDoc::new(add_id, LayerKind::ResidualAdd));
        inserted += 1;
    }

    if inserted > 0 {
        log::debug!("inserted {inserted} ResidualAdd layer(s) into `{}`", doc.name);
    }
    Ok(out)
}
