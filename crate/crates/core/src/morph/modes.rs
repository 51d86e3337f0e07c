// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::blocks::LayerBlock;
use super::MorphError;
use crate::costmodel::{
    allocation_bounds, breakdown, estimate, estimate_mapped, ConvMapping, CostEstimate, LatencyTerms, PEAllocation,
};
use crate::netgraph::{DeviceProfile, LayerDoc, LayerKind, NetworkGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Depth,
    Width,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeParams {
    Depth { blocks: usize },
    Width { fraction: f64 },
}

/// A requested mode, written `depth:K` or `width:F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSpec {
    Depth(usize),
    Width(f64),
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSpec::Depth(k) => write!(f, "depth:{k}"),
            ModeSpec::Width(x) => write!(f, "width:{x}"),
        }
    }
}

impl FromStr for ModeSpec {
    type Err = MorphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MorphError::InvalidMode(format!("expected `depth:K` or `width:F`, got `{s}`"));
        let (kind, value) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "depth" => value.parse().map(ModeSpec::Depth).map_err(|_| bad()),
            "width" => value.parse().map(ModeSpec::Width).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct MorphMode<T> {
    pub name: String,
    pub kind: ModeKind,
    pub params: ModeParams,
    /// PEs left running; the FC entry is the PE count of the active classifier.
    pub active_alloc: PEAllocation,
    /// Active filters per active conv layer.
    pub active_widths: Vec<u64>,
    /// Latency and resources of the active part only.
    pub estimate: CostEstimate<T>,
    /// Synthesized footprint, identical for every mode of a design.
    pub resident: CostEstimate<T>,
    /// One frame of the target mode after reactivation.
    pub switch_latency_s: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

/// One synthesized allocation together with the blocks it can be truncated to.
#[derive(Debug, Clone)]
pub struct MorphableDesign<T> {
    graph: NetworkGraph,
    alloc: PEAllocation,
    blocks: Vec<LayerBlock>,
    dev: DeviceProfile,
    terms: LatencyTerms<T>,
    full: CostEstimate<T>,
    resident: CostEstimate<T>,
}

impl<T: Scalar> MorphableDesign<T> {
    /// Full-network estimate, plus resident cost of every intermediate block head.
    pub fn new(
        graph: NetworkGraph,
        alloc: PEAllocation,
        blocks: Vec<LayerBlock>,
        dev: DeviceProfile,
        terms: LatencyTerms<T>,
    ) -> Result<Self, MorphError> {
        if blocks.is_empty() {
            return Err(MorphError::EmptyBlock("design needs at least one block".into()));
        }
        let full = estimate(&graph, &alloc, &dev, &terms)?;
        let mut d = Self { graph, alloc, blocks, dev, terms, full: full.clone(), resident: full };
        for k in 1..d.blocks.len() {
            let (sub, mapping) = d.depth_parts(k)?;
            let head_id = head_id(&d.blocks[k - 1]);
            let layers = breakdown(&sub, &mapping, d.alloc.fc_pe, &d.dev, &d.terms)?;
            let head = layers.iter().find(|c| c.id == head_id).expect("head layer is costed");
            d.resident.dsp += head.dsp;
            d.resident.lut += head.lut;
            d.resident.bram += head.bram;
            d.resident.registers += head.registers;
        }
        Ok(d)
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn alloc(&self) -> &PEAllocation {
        &self.alloc
    }

    pub fn blocks(&self) -> &[LayerBlock] {
        &self.blocks
    }

    pub fn full(&self) -> &CostEstimate<T> {
        &self.full
    }

    pub fn resident(&self) -> &CostEstimate<T> {
        &self.resident
    }

    pub fn mode(&self, spec: ModeSpec) -> Result<MorphMode<T>, MorphError> {
        match spec {
            ModeSpec::Depth(k) => self.depth_mode(k),
            ModeSpec::Width(f) => self.width_mode(f),
        }
    }

    /// Network cut after block `k` with that block's head; `k` = block count is the full network.
    pub fn depth_subgraph(&self, k: usize) -> Result<NetworkGraph, MorphError> {
        let b = self.blocks.len();
        if k < 1 || k > b {
            return Err(MorphError::OutOfRange(format!("depth {k} outside 1..={b}")));
        }
        if k == b {
            return Ok(self.graph.clone());
        }
        let mut doc = self.graph.to_document();
        let mut keep: Vec<String> =
            doc.layers.iter().filter(|l| l.kind == LayerKind::Input).map(|l| l.id.clone()).collect();
        keep.extend(self.blocks[..k].iter().flat_map(|blk| blk.layer_ids.iter().cloned()));
        let output_id = doc
            .layers
            .iter()
            .find(|l| l.kind == LayerKind::Output)
            .map_or_else(|| "output".to_string(), |l| l.id.clone());
        let last = self.blocks[k - 1].layer_ids.last().expect("blocks are non-empty").clone();
        let head = head_id(&self.blocks[k - 1]);

        doc.layers.retain(|l| keep.contains(&l.id));
        doc.connections.retain(|(s, d)| keep.contains(s) && keep.contains(d));
        let mut fc = LayerDoc::new(head.clone(), LayerKind::FullyConnected);
        fc.fc_out = Some(self.blocks[k - 1].output_head.fc_out);
        doc.layers.push(fc);
        doc.layers.push(LayerDoc::new(output_id.clone(), LayerKind::Output));
        doc.connections.push((last, head.clone()));
        doc.connections.push((head, output_id));
        doc.name = format!("{}@depth{k}", doc.name);
        Ok(NetworkGraph::from_document(&doc)?)
    }

    fn depth_parts(&self, k: usize) -> Result<(NetworkGraph, Vec<ConvMapping>), MorphError> {
        let sub = self.depth_subgraph(k)?;
        let mut mapping = self.alloc.mapping(&self.graph);
        mapping.truncate(sub.conv_count());
        Ok((sub, mapping))
    }

    /// Blocks after `k` are gated; the active path ends in block `k`'s head.
    pub fn depth_mode(&self, k: usize) -> Result<MorphMode<T>, MorphError> {
        let (sub, mapping) = self.depth_parts(k)?;
        let est = estimate_mapped(&sub, &mapping, self.alloc.fc_pe, &self.dev, &self.terms)?;
        let (widths, fc_ub) = allocation_bounds(&sub);
        let active_alloc = PEAllocation::new(mapping.iter().map(|m| m.pes).collect(), self.alloc.fc_pe.min(fc_ub));
        Ok(self.finish(ModeSpec::Depth(k), ModeParams::Depth { blocks: k }, active_alloc, widths, est))
    }

    /// Network with every conv narrowed to `floor(f·N)` filters, shapes re-propagated.
    pub fn width_subgraph(&self, fraction: f64) -> Result<NetworkGraph, MorphError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(MorphError::OutOfRange(format!("width fraction {fraction} outside (0, 1]")));
        }
        let mut doc = self.graph.to_document();
        for l in &mut doc.layers {
            if let Some(n) = l.filters {
                let narrowed = active_filters(n, fraction);
                if narrowed < 1 {
                    return Err(MorphError::TooNarrow { layer: l.id.clone(), fraction });
                }
                l.filters = Some(narrowed);
            }
            if l.kind != LayerKind::Input {
                l.in_shape = None;
            }
            l.fc_in = None;
        }
        doc.name = format!("{}@width{fraction}", doc.name);
        Ok(NetworkGraph::from_document(&doc)?)
    }

    /// Filters `>= floor(f·N)` are gated. PE `j` owns the filter block
    /// `[floor(jN/P), floor((j+1)N/P))`; a PE stays on while any of its filters is active.
    pub fn width_mode(&self, fraction: f64) -> Result<MorphMode<T>, MorphError> {
        let narrow = self.width_subgraph(fraction)?;
        let convs = self.graph.conv_indices();
        let mapping: Vec<ConvMapping> = convs
            .iter()
            .zip(&self.alloc.conv_pe)
            .map(|(&i, &p)| {
                let n = self.graph.layer(i).filters().unwrap_or(1);
                gated_mapping(n, p, active_filters(n, fraction))
            })
            .collect();
        let est = estimate_mapped(&narrow, &mapping, self.alloc.fc_pe, &self.dev, &self.terms)?;
        let (widths, fc_ub) = allocation_bounds(&narrow);
        let active_alloc = PEAllocation::new(mapping.iter().map(|m| m.pes).collect(), self.alloc.fc_pe.min(fc_ub));
        Ok(self.finish(ModeSpec::Width(fraction), ModeParams::Width { fraction }, active_alloc, widths, est))
    }

    fn finish(
        &self,
        spec: ModeSpec,
        params: ModeParams,
        active_alloc: PEAllocation,
        active_widths: Vec<u64>,
        estimate: CostEstimate<T>,
    ) -> MorphMode<T> {
        MorphMode {
            name: spec.to_string(),
            kind: match spec {
                ModeSpec::Depth(_) => ModeKind::Depth,
                ModeSpec::Width(_) => ModeKind::Width,
            },
            params,
            active_alloc,
            active_widths,
            switch_latency_s: estimate.latency_s,
            estimate,
            resident: self.resident.clone(),
            accuracy: None,
        }
    }
}

fn head_id(b: &LayerBlock) -> String {
    format!("head_{}", b.block_id)
}

/// `floor(f·N)`, tolerant of the representation error in decimal fractions such as 0.29.
fn active_filters(n: u64, fraction: f64) -> u64 {
    (fraction * n as f64 + 1e-9).floor() as u64
}

/// Active PEs and worst-case per-PE load when only the first `active` of `n` filters run on `p` PEs.
fn gated_mapping(n: u64, p: u64, active: u64) -> ConvMapping {
    let block = |j: u64| (j * n / p, (j + 1) * n / p);
    let mut pes = 0;
    let mut load = 0;
    for j in 0..p {
        let (lo, hi) = block(j);
        let on = hi.min(active).saturating_sub(lo);
        if on > 0 {
            pes += 1;
            load = load.max(on);
        }
    }
    ConvMapping { pes, load }
}
