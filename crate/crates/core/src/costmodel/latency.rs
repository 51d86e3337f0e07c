// SPDX-License-Identifier: Apache-2.0

//! Cycle and latency formulas for single PEs and the layer pipeline.

use super::terms::{LatencyTerms, ResolvedTerms};
use super::CostError;
use crate::netgraph::{LayerOp, LayerSpec, PoolKind, Shape};
use crate::scalar::{ceil_cycles, ceil_log2, div_ceil, Cycles, Scalar};

/// Exact streaming term of one PE: `D_in·[first] + (P_b + 1)/2 + (W + P_b + P_f)·H`.
///
/// `width`/`height` are the unpadded input dims; padding widens the streamed frame on both sides.
pub fn conv_core_cycles_exact(width: u64, height: u64, pad: u64, t: &ResolvedTerms, is_first: bool) -> Cycles {
    let w = width + 2 * pad;
    let h = height + 2 * pad;
    let d_in = if is_first { t.d_in } else { 0 };
    Cycles::from_integer(d_in) + Cycles::new(t.p_b + 1, 2) + Cycles::from_integer((w + t.p_b + t.p_f) * h)
}

/// Whole cycles of one conv PE over a frame: rounded-up streaming term plus the pipeline overheads.
pub fn conv_cycles(width: u64, height: u64, pad: u64, t: &ResolvedTerms, is_first: bool) -> u64 {
    ceil_cycles(conv_core_cycles_exact(width, height, pad, t, is_first))
        + t.t_pad
        + t.t_tap
        + t.t_mul
        + t.t_add
        + t.d_out
        + t.t_relu
}

/// Per-window compute delay of a pooling PE: a comparator tree for max, fixed-weight MAC for average.
pub fn pool_compute_cycles(kind: PoolKind, kernel: u64, t: &ResolvedTerms) -> u64 {
    match kind {
        PoolKind::Max => ceil_log2(kernel * kernel),
        PoolKind::Avg => t.t_mul + t.t_add,
    }
}

/// Pool PEs share the conv line-buffer front end but have no activation stage.
pub fn pool_cycles(
    width: u64,
    height: u64,
    pad: u64,
    kind: PoolKind,
    kernel: u64,
    t: &ResolvedTerms,
    is_first: bool,
) -> u64 {
    ceil_cycles(conv_core_cycles_exact(width, height, pad, t, is_first))
        + t.t_pad
        + t.t_tap
        + pool_compute_cycles(kind, kernel, t)
        + t.d_out
}

/// Latency of one conv PE processing one filter over the layer's input frame.
pub fn conv_pe_latency<T: Scalar>(layer: &LayerSpec, terms: &LatencyTerms<T>, is_first: bool) -> Result<T, CostError> {
    terms.check()?;
    let LayerOp::Conv { window, .. } = layer.op else {
        return Err(CostError::WrongLayerKind(layer.id.clone()));
    };
    let s = layer.in_shape;
    let r = terms.resolve(window.kernel);
    Ok(T::of_u64(conv_cycles(s.width, s.height, window.padding, &r, is_first)) * terms.clk_period)
}

pub fn pool_pe_latency<T: Scalar>(layer: &LayerSpec, terms: &LatencyTerms<T>, is_first: bool) -> Result<T, CostError> {
    terms.check()?;
    let LayerOp::Pool { kind, window } = layer.op else {
        return Err(CostError::WrongLayerKind(layer.id.clone()));
    };
    let s = layer.in_shape;
    let r = terms.resolve(window.kernel);
    Ok(T::of_u64(pool_cycles(s.width, s.height, window.padding, kind, window.kernel, &r, is_first)) * terms.clk_period)
}

/// `[(FM_W + P_b + P_f)(FM_H - 1) + FM_H] · ceil(Ch / fc_pe)`.
pub fn fc_cycles(in_map: Shape, fc_pe: u64, p_b: u64, p_f: u64) -> u64 {
    let fc_pe = fc_pe.clamp(1, in_map.channels.max(1));
    let per_pass = (in_map.width + p_b + p_f) * (in_map.height - 1) + in_map.height;
    per_pass * div_ceil(in_map.channels, fc_pe)
}

pub fn fc_latency<T: Scalar>(terms: &LatencyTerms<T>, fc_pe: u64, in_map: Shape) -> Result<T, CostError> {
    terms.check()?;
    Ok(T::of_u64(fc_cycles(in_map, fc_pe, terms.p_b, terms.p_f)) * terms.clk_period)
}

/// `Σ stage + (n - 1)·I + T_memory`.
///
/// With `m` equal stages of length `P` this is the usual `m·P + (n - 1)·I`.
pub fn pipeline_latency<T: Scalar>(stage_latencies: &[T], n_elements: u64, initiation_interval: T, t_memory: T) -> T {
    let fill: T = stage_latencies.iter().copied().sum();
    fill + T::of_u64(n_elements.saturating_sub(1)) * initiation_interval + t_memory
}

/// `m·P + (n - 1)·I` for `m` stages of one clock period each.
pub fn uniform_pipeline_latency<T: Scalar>(m: u64, n_elements: u64, clk_period: T, initiation_interval: T) -> T {
    T::of_u64(m) * clk_period + T::of_u64(n_elements.saturating_sub(1)) * initiation_interval
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::Window;
    use approx::assert_relative_eq;

    fn conv(h: u64, w: u64, k: u64, pad: u64) -> LayerSpec {
        LayerSpec {
            id: "c".into(),
            op: LayerOp::Conv { filters: 4, window: Window::new(k, 1, pad) },
            in_shape: Shape::new(h, w, 1),
        }
    }

    #[test]
    fn unit_frame_has_half_cycle_porch() {
        let t = LatencyTerms::<f64>::zero_overhead(1.0).resolve(1);
        assert_eq!(conv_core_cycles_exact(1, 1, 0, &t, true), Cycles::new(3, 2));
        assert_eq!(conv_cycles(1, 1, 0, &t, true), 2);
    }

    #[test]
    fn default_terms_8x8_k3() {
        let terms = LatencyTerms::<f64>::with_clock_period(4e-9);
        // 4 + ceil(1/2) + 64, then 2 + 3 + 3 + 6 + 4 + 1
        let cycles = 4 + 1 + 64 + 2 + 3 + 3 + 6 + 4 + 1;
        assert_relative_eq!(conv_pe_latency(&conv(8, 8, 3, 0), &terms, true).unwrap(), cycles as f64 * 4e-9);
    }

    #[test]
    fn frame_term_linear_in_height() {
        let t = LatencyTerms::<f64>::with_clock_period(1.0).resolve(3);
        let a = conv_core_cycles_exact(8, 8, 0, &t, false);
        let b = conv_core_cycles_exact(8, 16, 0, &t, false);
        assert_eq!(b - a, Cycles::from_integer(64));
    }

    #[test]
    fn porch_widens_rows() {
        let mut terms = LatencyTerms::<f64>::with_clock_period(1.0);
        terms.p_b = 2;
        terms.p_f = 3;
        let r = terms.resolve(3);
        // 4 + ceil(3/2) + (8 + 5)·8
        assert_eq!(ceil_cycles(conv_core_cycles_exact(8, 8, 0, &r, true)), 4 + 2 + 104);
    }

    #[test]
    fn pool_kinds_differ_only_in_compute() {
        let r = LatencyTerms::<f64>::with_clock_period(1.0).resolve(2);
        let max = pool_cycles(28, 28, 0, PoolKind::Max, 2, &r, false);
        let avg = pool_cycles(28, 28, 0, PoolKind::Avg, 2, &r, false);
        assert_eq!(avg - max, (r.t_mul + r.t_add) - 2);
    }

    #[test]
    fn conv_latency_rejects_other_kinds() {
        let mut l = conv(8, 8, 3, 0);
        l.op = LayerOp::ResidualAdd;
        let terms = LatencyTerms::<f64>::with_clock_period(1.0);
        assert!(matches!(conv_pe_latency(&l, &terms, false), Err(CostError::WrongLayerKind(_))));
    }

    #[test]
    fn fc_examples() {
        let m = Shape::new(3, 3, 32);
        assert_eq!(fc_cycles(m, 32, 0, 0), 9);
        assert_eq!(fc_cycles(m, 8, 0, 0), 36);
        assert_eq!(fc_cycles(m, 4, 0, 0), 72);
        // not divisible: ceil(32 / 5) = 7 passes
        assert_eq!(fc_cycles(m, 5, 0, 0), 63);
        assert_eq!(fc_cycles(Shape::new(1, 7, 4), 4, 0, 0), 1);
    }

    #[test]
    fn pipeline_examples() {
        let stages = [4e-9; 5];
        assert_relative_eq!(pipeline_latency(&stages, 64, 4e-9, 0.0), 272e-9, max_relative = 1e-12);
        assert_relative_eq!(pipeline_latency(&stages, 1, 4e-9, 0.0), 20e-9, max_relative = 1e-12);
        assert_relative_eq!(uniform_pipeline_latency(5, 64, 4e-9, 4e-9), 272e-9, max_relative = 1e-12);
        assert_relative_eq!(pipeline_latency(&stages, 1, 4e-9, 1e-9), 21e-9, max_relative = 1e-12);
    }

    #[test]
    fn f32_latency() {
        let terms = LatencyTerms::<f32>::with_clock_period(4e-9);
        let v = conv_pe_latency(&conv(8, 8, 3, 0), &terms, true).unwrap();
        assert_relative_eq!(v, 88.0 * 4e-9, max_relative = 1e-6);
    }
}
