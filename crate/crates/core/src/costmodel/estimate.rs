// SPDX-License-Identifier: Apache-2.0

//! Whole-network estimate assembly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::latency::{conv_cycles, fc_cycles, pipeline_latency, pool_cycles};
use super::pe::{
    bram_linebuffer, fc_resources, lut_lookup, PeKind, CONV_PE_EXTRA_BRAM, FC_DSP_PER_PE, FC_LUT_PER_PE, POOL_PE_BRAM,
};
use super::terms::LatencyTerms;
use super::CostError;
use crate::netgraph::{DeviceProfile, LayerKind, LayerOp, NetworkGraph};
use crate::scalar::{div_ceil, Scalar};

/// Dedicated PEs per conv layer (topological order) plus FC parallelism.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PEAllocation {
    pub conv_pe: Vec<u64>,
    pub fc_pe: u64,
}

impl PEAllocation {
    pub fn new(conv_pe: Vec<u64>, fc_pe: u64) -> Self {
        Self { conv_pe, fc_pe }
    }

    pub fn ones(g: &NetworkGraph) -> Self {
        Self::new(vec![1; g.conv_count()], 1)
    }

    /// Every layer fully parallel: `P(i) = N(i)`, FC PEs equal to its input channels.
    pub fn full(g: &NetworkGraph) -> Self {
        let (ub, fc_ub) = allocation_bounds(g);
        Self::new(ub, fc_ub)
    }

    pub fn validate(&self, g: &NetworkGraph) -> Result<(), CostError> {
        let (ub, fc_ub) = allocation_bounds(g);
        if self.conv_pe.len() != ub.len() {
            return Err(CostError::AllocationMismatch(format!(
                "{} conv entries for {} conv layers",
                self.conv_pe.len(),
                ub.len()
            )));
        }
        for (i, (&p, &u)) in self.conv_pe.iter().zip(&ub).enumerate() {
            if p < 1 || p > u {
                return Err(CostError::AllocationMismatch(format!("P({}) = {p} outside [1, {u}]", i + 1)));
            }
        }
        if self.fc_pe < 1 || self.fc_pe > fc_ub {
            return Err(CostError::AllocationMismatch(format!("fc_pe = {} outside [1, {fc_ub}]", self.fc_pe)));
        }
        Ok(())
    }

    /// Each PE takes `ceil(N / P)` filters in sequence.
    pub fn mapping(&self, g: &NetworkGraph) -> Vec<ConvMapping> {
        g.conv_indices()
            .iter()
            .zip(&self.conv_pe)
            .map(|(&i, &p)| {
                let n = g.layer(i).filters().unwrap_or(1);
                ConvMapping { pes: p, load: div_ceil(n, p.max(1)) }
            })
            .collect()
    }
}

/// `4-8-16:8` form: conv PEs joined by `-`, then the FC PE count.
impl fmt::Display for PEAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conv: Vec<String> = self.conv_pe.iter().map(u64::to_string).collect();
        write!(f, "{}:{}", conv.join("-"), self.fc_pe)
    }
}

impl FromStr for PEAllocation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (conv, fc) = s.trim().split_once(':').ok_or_else(|| format!("expected `P1-P2-...:FC`, got `{s}`"))?;
        let fc_pe = fc.trim().parse::<u64>().map_err(|e| format!("fc_pe `{fc}`: {e}"))?;
        let conv_pe = if conv.trim().is_empty() {
            Vec::new()
        } else {
            conv.split('-')
                .map(|p| p.trim().parse::<u64>().map_err(|e| format!("conv entry `{p}`: {e}")))
                .collect::<Result<_, _>>()?
        };
        Ok(Self { conv_pe, fc_pe })
    }
}

/// How one conv layer is mapped: PE count and filters processed per PE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvMapping {
    pub pes: u64,
    pub load: u64,
}

/// Parallel output streams of a layer and how many sequential passes each makes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerStream {
    pub streams: u64,
    pub load: u64,
    /// PEs instantiated for the layer: `P(i)·P(i-1)` for conv, one per stream for pooling,
    /// FC processing elements for FC.
    pub pes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate<T> {
    pub latency_s: T,
    pub dsp: u64,
    pub lut: u64,
    pub bram: u64,
    pub registers: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_mw: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCost<T> {
    pub id: String,
    pub kind: LayerKind,
    pub streams: u64,
    pub load: u64,
    pub pes: u64,
    pub dsp: u64,
    pub lut: u64,
    pub bram: u64,
    pub registers: u64,
    pub cycles: u64,
    pub latency_s: T,
}

/// Upper bounds of the genome: filters per conv layer, and input channels of the first FC layer
/// (1 when the network has no FC layer).
pub fn allocation_bounds(g: &NetworkGraph) -> (Vec<u64>, u64) {
    let ub = g.conv_indices().iter().map(|&i| g.layer(i).filters().unwrap_or(1)).collect();
    let fc_ub = (0..g.layers().len()).find(|&i| g.layer(i).is_fc()).map(|i| fc_input_channels(g, i)).unwrap_or(1);
    (ub, fc_ub)
}

fn fc_input_channels(g: &NetworkGraph, idx: usize) -> u64 {
    g.output_shape_of(g.preds(idx)[0]).channels
}

fn fc_effective(g: &NetworkGraph, idx: usize, fc_pe: u64) -> u64 {
    fc_pe.clamp(1, fc_input_channels(g, idx).max(1))
}

/// Stream count, per-stream load, and PE count for every layer in topological order.
pub fn stream_plan(g: &NetworkGraph, mapping: &[ConvMapping], fc_pe: u64) -> Result<Vec<LayerStream>, CostError> {
    if mapping.len() != g.conv_count() {
        return Err(CostError::AllocationMismatch(format!(
            "{} conv mappings for {} conv layers",
            mapping.len(),
            g.conv_count()
        )));
    }
    if fc_pe < 1 {
        return Err(CostError::AllocationMismatch("fc_pe must be at least 1".into()));
    }
    let mut plan: Vec<LayerStream> = Vec::with_capacity(g.layers().len());
    let mut next_conv = 0;
    for (i, l) in g.layers().iter().enumerate() {
        let preds: Vec<LayerStream> = g.preds(i).iter().map(|&p| plan[p]).collect();
        let s = match l.op {
            LayerOp::Input => LayerStream { streams: l.in_shape.channels, load: 1, pes: 0 },
            LayerOp::Conv { filters, .. } => {
                let m = mapping[next_conv];
                next_conv += 1;
                if m.pes < 1 || m.pes > filters || m.load < 1 {
                    return Err(CostError::AllocationMismatch(format!(
                        "`{}`: {} PEs with load {} for {filters} filters",
                        l.id, m.pes, m.load
                    )));
                }
                LayerStream { streams: m.pes, load: m.load, pes: m.pes * preds[0].streams }
            }
            LayerOp::Pool { .. } => {
                LayerStream { streams: preds[0].streams, load: preds[0].load, pes: preds[0].streams }
            }
            LayerOp::ResidualAdd => LayerStream {
                streams: preds.iter().map(|p| p.streams).min().unwrap_or(1),
                load: preds.iter().map(|p| p.load).max().unwrap_or(1),
                pes: 0,
            },
            LayerOp::FullyConnected { .. } => {
                let n = fc_effective(g, i, fc_pe);
                LayerStream { streams: 1, load: 1, pes: n }
            }
            LayerOp::Output => LayerStream { pes: 0, ..preds[0] },
        };
        plan.push(s);
    }
    Ok(plan)
}

/// `Σ L(j)·K(j)² + 10·l_fc` summed over FC layers.
pub fn dsp_total(g: &NetworkGraph, alloc: &PEAllocation) -> Result<u64, CostError> {
    alloc.validate(g)?;
    let plan = stream_plan(g, &alloc.mapping(g), alloc.fc_pe)?;
    Ok(g.layers()
        .iter()
        .zip(&plan)
        .map(|(l, s)| match l.op {
            LayerOp::Conv { window, .. } => s.pes * window.kernel * window.kernel,
            LayerOp::FullyConnected { .. } => FC_DSP_PER_PE * s.pes,
            _ => 0,
        })
        .sum())
}

/// Per-layer resources and latency for an explicit conv mapping.
pub fn breakdown<T: Scalar>(
    g: &NetworkGraph,
    mapping: &[ConvMapping],
    fc_pe: u64,
    dev: &DeviceProfile,
    terms: &LatencyTerms<T>,
) -> Result<Vec<LayerCost<T>>, CostError> {
    terms.check()?;
    let plan = stream_plan(g, mapping, fc_pe)?;
    let fp = u64::from(dev.fp_rep);
    let mut out = Vec::new();
    for (i, l) in g.layers().iter().enumerate() {
        let s = plan[i];
        let is_first = g.preds(i).first().is_some_and(|&p| g.layer(p).kind() == LayerKind::Input);
        let (dsp, lut, bram, registers, cycles) = match l.op {
            LayerOp::Conv { window, .. } => {
                let k = window.kernel;
                let (lut, reg) = lut_lookup(PeKind::Conv, k)?;
                let r = terms.resolve(k);
                let c = conv_cycles(l.in_shape.width, l.in_shape.height, window.padding, &r, is_first);
                (
                    s.pes * k * k,
                    s.pes * (lut + k * fp),
                    s.pes * (bram_linebuffer(l.in_shape.width, k, dev.fp_rep) + CONV_PE_EXTRA_BRAM),
                    s.pes * reg,
                    c * s.load,
                )
            }
            LayerOp::Pool { kind, window } => {
                let k = window.kernel;
                let (lut, reg) = lut_lookup(PeKind::Pool, k)?;
                let r = terms.resolve(k);
                let c = pool_cycles(l.in_shape.width, l.in_shape.height, window.padding, kind, k, &r, is_first);
                (0, s.pes * lut, s.pes * POOL_PE_BRAM, s.pes * reg, c * s.load)
            }
            LayerOp::FullyConnected { fc_out, .. } => {
                let in_map = g.output_shape_of(g.preds(i)[0]);
                let (_, _, reg) = fc_resources(fc_out, s.pes, s.pes - 1);
                (FC_DSP_PER_PE * s.pes, FC_LUT_PER_PE * s.pes, 0, reg, fc_cycles(in_map, s.pes, terms.p_b, terms.p_f))
            }
            LayerOp::ResidualAdd => {
                let c = l.in_shape.channels;
                (0, c * fp, 0, c, 1)
            }
            LayerOp::Input | LayerOp::Output => continue,
        };
        out.push(LayerCost {
            id: l.id.clone(),
            kind: l.kind(),
            streams: s.streams,
            load: s.load,
            pes: s.pes,
            dsp,
            lut,
            bram,
            registers,
            cycles,
            latency_s: T::of_u64(cycles) * terms.clk_period,
        });
    }
    Ok(out)
}

/// Estimate for an explicit conv mapping; FC layers use `min(fc_pe, input channels)` PEs.
pub fn estimate_mapped<T: Scalar>(
    g: &NetworkGraph,
    mapping: &[ConvMapping],
    fc_pe: u64,
    dev: &DeviceProfile,
    terms: &LatencyTerms<T>,
) -> Result<CostEstimate<T>, CostError> {
    let layers = breakdown(g, mapping, fc_pe, dev, terms)?;
    let stages: Vec<T> = layers.iter().map(|c| c.latency_s).collect();
    let ii = stages.iter().copied().fold(terms.clk_period, T::max);
    Ok(CostEstimate {
        latency_s: pipeline_latency(&stages, 1, ii, terms.t_memory),
        dsp: layers.iter().map(|c| c.dsp).sum(),
        lut: layers.iter().map(|c| c.lut).sum(),
        bram: layers.iter().map(|c| c.bram).sum(),
        registers: layers.iter().map(|c| c.registers).sum(),
        power_mw: None,
    })
}

/// Objective vector of one allocation.
pub fn estimate<T: Scalar>(
    g: &NetworkGraph,
    alloc: &PEAllocation,
    dev: &DeviceProfile,
    terms: &LatencyTerms<T>,
) -> Result<CostEstimate<T>, CostError> {
    alloc.validate(g)?;
    estimate_mapped(g, &alloc.mapping(g), alloc.fc_pe, dev, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{mnist_8_16_32, SequentialBuilder, Shape};

    fn dev() -> DeviceProfile {
        DeviceProfile::zynq7100()
    }

    #[test]
    fn mnist_reference_rows() {
        let g = mnist_8_16_32();
        let terms = LatencyTerms::<f64>::for_device(&dev());
        // (allocation, fc_pe, ΣL, dsp, bram)
        let rows = [([4, 8, 16], 8, 164, 1556, 356), ([2, 4, 8], 8, 42, 458, 98), ([1, 2, 4], 8, 11, 179, 29)];
        for (p, fc, sum_l, dsp, bram) in rows {
            let a = PEAllocation::new(p.to_vec(), fc);
            let plan = stream_plan(&g, &a.mapping(&g), fc).unwrap();
            let l: u64 = g.conv_indices().iter().map(|&i| plan[i].pes).sum();
            assert_eq!(l, sum_l);
            let e = estimate(&g, &a, &dev(), &terms).unwrap();
            assert_eq!(e.dsp, dsp, "{a}");
            assert_eq!(e.bram, bram, "{a}");
        }
    }

    #[test]
    fn single_conv_minimum() {
        let g = SequentialBuilder::new("one", Shape::new(8, 8, 1)).conv("c", 4, 3, 1, 0).fc("fc", 10).build().unwrap();
        assert_eq!(dsp_total(&g, &PEAllocation::ones(&g)).unwrap(), 9 + 10);
    }

    #[test]
    fn fc_only_network() {
        let g = SequentialBuilder::new("fc", Shape::new(1, 1, 16)).fc("fc", 10).build().unwrap();
        assert_eq!(dsp_total(&g, &PEAllocation::new(vec![], 1)).unwrap(), 10);
    }

    #[test]
    fn k5_single_pe_no_fc() {
        let g = SequentialBuilder::new("k5", Shape::new(8, 8, 1)).conv("c", 2, 5, 1, 0).build().unwrap();
        assert_eq!(dsp_total(&g, &PEAllocation::new(vec![1], 1)).unwrap(), 25);
    }

    #[test]
    fn rejects_bad_allocations() {
        let g = mnist_8_16_32();
        assert!(PEAllocation::new(vec![1, 1], 1).validate(&g).is_err());
        assert!(PEAllocation::new(vec![0, 1, 1], 1).validate(&g).is_err());
        assert!(PEAllocation::new(vec![9, 1, 1], 1).validate(&g).is_err());
        assert!(PEAllocation::new(vec![1, 1, 1], 33).validate(&g).is_err());
        assert!(PEAllocation::new(vec![8, 16, 32], 32).validate(&g).is_ok());
    }

    #[test]
    fn unsupported_kernel_propagates() {
        let g = SequentialBuilder::new("k7", Shape::new(16, 16, 1)).conv("c", 2, 7, 1, 0).build().unwrap();
        let terms = LatencyTerms::<f64>::for_device(&dev());
        let r = estimate(&g, &PEAllocation::new(vec![1], 1), &dev(), &terms);
        assert!(matches!(r, Err(CostError::UnsupportedKernel { kernel: 7, .. })));
    }

    #[test]
    fn display_roundtrip() {
        let a = PEAllocation::new(vec![4, 8, 16], 8);
        assert_eq!(a.to_string(), "4-8-16:8");
        assert_eq!("4-8-16:8".parse::<PEAllocation>().unwrap(), a);
        assert_eq!(":3".parse::<PEAllocation>().unwrap(), PEAllocation::new(vec![], 3));
        assert!("4-x:1".parse::<PEAllocation>().is_err());
    }

    #[test]
    fn pooling_has_no_dsp_and_fc_no_bram() {
        let g = mnist_8_16_32();
        let terms = LatencyTerms::<f64>::for_device(&dev());
        let a = PEAllocation::new(vec![2, 2, 2], 4);
        for c in breakdown(&g, &a.mapping(&g), a.fc_pe, &dev(), &terms).unwrap() {
            match c.kind {
                LayerKind::MaxPool | LayerKind::AvgPool => assert_eq!(c.dsp, 0),
                LayerKind::FullyConnected => assert_eq!(c.bram, 0),
                _ => {}
            }
        }
    }

    #[test]
    fn estimates_are_reproducible() {
        let g = mnist_8_16_32();
        let terms = LatencyTerms::<f64>::for_device(&dev());
        let a = PEAllocation::new(vec![3, 5, 7], 6);
        let x = estimate(&g, &a, &dev(), &terms).unwrap();
        let y = estimate(&g, &a, &dev(), &terms).unwrap();
        assert_eq!(x.latency_s.to_bits(), y.latency_s.to_bits());
        assert_eq!(x, y);
    }
}
