// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::MorphError;
use crate::netgraph::{LayerOp, NetworkGraph, Shape};

/// Classifier attached to a block's output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub in_shape: Shape,
    pub fc_in: u64,
    pub fc_out: u64,
}

/// Contiguous run of backbone layers that can serve as the last stage of a shortened network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerBlock {
    pub block_id: String,
    pub layer_ids: Vec<String>,
    pub output_head: HeadSpec,
}

fn block_name(i: usize) -> String {
    let mut n = i;
    let mut s = String::new();
    loop {
        s.insert(0, (b'A' + (n % 26) as u8) as char);
        if n < 26 {
            return s;
        }
        n = n / 26 - 1;
    }
}

/// Backbone layer indices in topological order, up to the first FC layer.
pub(crate) fn backbone(g: &NetworkGraph) -> Vec<usize> {
    let stop = (0..g.layers().len()).find(|&i| g.layer(i).is_fc()).unwrap_or(g.layers().len());
    (0..stop).filter(|&i| g.layer(i).is_backbone()).collect()
}

fn inside_residual(g: &NetworkGraph, id: &str) -> bool {
    g.residual_blocks().iter().any(|b| b.merge != id && b.members.iter().any(|m| m == id))
}

/// Splits the backbone after each boundary layer; layers after the last boundary form a final block.
pub fn partition_blocks(
    g: &NetworkGraph,
    boundaries: &[String],
    class_count: u64,
) -> Result<Vec<LayerBlock>, MorphError> {
    let bb = backbone(g);
    if bb.is_empty() {
        return Err(MorphError::EmptyBlock("network has no conv/pool backbone".into()));
    }
    let pos_of = |id: &str| bb.iter().position(|&i| g.layer(i).id == id);
    let mut cuts = Vec::with_capacity(boundaries.len());
    for b in boundaries {
        let p = pos_of(b).ok_or_else(|| MorphError::InvalidCut(format!("`{b}` is not a backbone layer")))?;
        if inside_residual(g, b) {
            return Err(MorphError::InvalidCut(format!("`{b}` lies inside a residual block")));
        }
        if cuts.last().is_some_and(|&last| p <= last) {
            return Err(MorphError::EmptyBlock(format!("boundary `{b}` does not advance past the previous one")));
        }
        cuts.push(p);
    }
    if cuts.last() != Some(&(bb.len() - 1)) {
        cuts.push(bb.len() - 1);
    }
    let mut blocks = Vec::with_capacity(cuts.len());
    let mut start = 0;
    for (k, &end) in cuts.iter().enumerate() {
        let ids: Vec<String> = bb[start..=end].iter().map(|&i| g.layer(i).id.clone()).collect();
        let out = g.output_shape_of(bb[end]);
        blocks.push(LayerBlock {
            block_id: block_name(k),
            layer_ids: ids,
            output_head: HeadSpec { in_shape: out, fc_in: out.elements(), fc_out: class_count },
        });
        start = end + 1;
    }
    Ok(blocks)
}

/// Cuts after every pooling layer that closes a conv stage (the next backbone layer is a conv,
/// or it is the last one); falls back to cutting after each conv when there is no pooling.
pub fn default_boundaries(g: &NetworkGraph) -> Vec<String> {
    let bb = backbone(g);
    let ok = |i: usize| !inside_residual(g, &g.layer(i).id);
    let is_pool = |i: usize| matches!(g.layer(i).op, LayerOp::Pool { .. });
    let mut cuts: Vec<String> = bb
        .iter()
        .enumerate()
        .filter(|&(k, &i)| is_pool(i) && ok(i) && bb.get(k + 1).is_none_or(|&n| g.layer(n).is_conv()))
        .map(|(_, &i)| g.layer(i).id.clone())
        .collect();
    if cuts.is_empty() {
        cuts = bb.iter().filter(|&&i| g.layer(i).is_conv() && ok(i)).map(|&i| g.layer(i).id.clone()).collect();
    }
    let mut seen = HashSet::new();
    cuts.retain(|c| seen.insert(c.clone()));
    cuts
}
