// SPDX-License-Identifier: Apache-2.0

//! Per-PE resource formulas.

use serde::{Deserialize, Serialize};

use super::CostError;
use crate::scalar::{ceil_log2, div_ceil};

/// Bits in one block RAM.
pub const BRAM_BITS: u64 = 18 * 1024;

/// DSP slices charged per FC processing element.
pub const FC_DSP_PER_PE: u64 = 10;

/// LUTs per FC processing element.
pub const FC_LUT_PER_PE: u64 = 360;

/// Extra blocks per conv PE beyond its line buffer (weights and partial results).
pub const CONV_PE_EXTRA_BRAM: u64 = 1;

/// Block RAMs per pooling PE.
pub const POOL_PE_BRAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeKind {
    Conv,
    Pool,
}

/// Multipliers, adders, and adder-tree stages of a `K x K` MAC core.
///
/// `n_add` is the full adder count of the reduction tree, `K^2 - 1`; the stage
/// count is `ceil(log2 K^2) + 1`.
pub fn mac_core_counts(kernel: u64) -> (u64, u64, u64) {
    let taps = kernel * kernel;
    (taps, taps - 1, ceil_log2(taps) + 1)
}

// (K, conv LUT, pool LUT, conv registers, pool registers)
const LUT_TABLE: [(u64, u64, u64, u64, u64); 4] =
    [(2, 550, 300, 1250, 750), (3, 850, 420, 2000, 1000), (4, 1400, 700, 3500, 1400), (5, 2000, 900, 5500, 2200)];

/// LUTs and slice registers for one PE, from the synthesized reference table.
pub fn lut_lookup(kind: PeKind, kernel: u64) -> Result<(u64, u64), CostError> {
    let row = LUT_TABLE.iter().find(|r| r.0 == kernel).ok_or(CostError::UnsupportedKernel { kind, kernel })?;
    Ok(match kind {
        PeKind::Conv => (row.1, row.3),
        PeKind::Pool => (row.2, row.4),
    })
}

/// `(n_mult, n_add, n_reg)` of an FC layer with `fc_out` heads, `n` PEs per head and `l` tree adders.
pub fn fc_resources(fc_out: u64, n: u64, l: u64) -> (u64, u64, u64) {
    let mult = fc_out * n;
    (mult, mult + fc_out * l, mult)
}

/// Line-buffer blocks: `ceil(width * K * bits / 18 Kb)`.
pub fn bram_linebuffer(fm_width: u64, kernel: u64, fp_rep: u32) -> u64 {
    div_ceil(fm_width * kernel * u64::from(fp_rep), BRAM_BITS)
}

/// PEs needed by conv layer `i` (1-based): `P(i) * P(i-1)`, where `pe[0]` holds `P(0)`,
/// the input channel count of the first conv layer.
pub fn layer_pe_demand(pe_with_input: &[u64], i: usize) -> u64 {
    pe_with_input[i] * pe_with_input[i - 1]
}
