// SPDX-License-Identifier: Apache-2.0

//! Analytical resource and latency model of the streaming accelerator.

mod estimate;
mod latency;
mod pe;
mod terms;

pub use estimate::{
    allocation_bounds, breakdown, dsp_total, estimate, estimate_mapped, stream_plan, ConvMapping, CostEstimate,
    LayerCost, LayerStream, PEAllocation,
};
pub use latency::{
    conv_core_cycles_exact, conv_cycles, conv_pe_latency, fc_cycles, fc_latency, pipeline_latency, pool_compute_cycles,
    pool_cycles, pool_pe_latency, uniform_pipeline_latency,
};
pub use pe::{
    bram_linebuffer, fc_resources, layer_pe_demand, lut_lookup, mac_core_counts, PeKind, BRAM_BITS, CONV_PE_EXTRA_BRAM,
    FC_DSP_PER_PE, FC_LUT_PER_PE, POOL_PE_BRAM,
};
pub use terms::{LatencyConfig, LatencyTerms, ResolvedTerms};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("no resource data for {kind:?} kernel K={kernel} (supported: 2..=5)")]
    UnsupportedKernel { kind: PeKind, kernel: u64 },
    #[error("incomplete latency terms: {0}")]
    IncompleteTerms(String),
    #[error("layer `{0}` has the wrong kind for this model")]
    WrongLayerKind(String),
    #[error("allocation does not fit the network: {0}")]
    AllocationMismatch(String),
}
