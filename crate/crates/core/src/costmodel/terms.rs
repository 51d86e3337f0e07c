// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::CostError;
use crate::netgraph::DeviceProfile;
use crate::scalar::{ceil_log2, Scalar};

/// Timing parameters of the streaming PE model.
///
/// Cycle-valued terms that depend on the kernel size are `None` by default and
/// resolve per layer: `T_pad = K - 1`, `T_tap = T_mul = K`, `T_add = ceil(log2 K^2) + 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyTerms<T> {
    pub clk_period: T,
    pub d_in: u64,
    pub d_out: u64,
    /// Back porch, idle cycles before each row.
    pub p_b: u64,
    /// Front porch, idle cycles after each row.
    pub p_f: u64,
    pub t_pad: Option<u64>,
    pub t_tap: Option<u64>,
    pub t_mul: Option<u64>,
    pub t_add: Option<u64>,
    pub t_relu: u64,
    pub t_memory: T,
}

/// Terms with every kernel-dependent delay fixed to a cycle count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedTerms {
    pub d_in: u64,
    pub d_out: u64,
    pub p_b: u64,
    pub p_f: u64,
    pub t_pad: u64,
    pub t_tap: u64,
    pub t_mul: u64,
    pub t_add: u64,
    pub t_relu: u64,
}

impl<T: Scalar> LatencyTerms<T> {
    pub fn with_clock_period(clk_period: T) -> Self {
        Self {
            clk_period,
            d_in: 4,
            d_out: 4,
            p_b: 0,
            p_f: 0,
            t_pad: None,
            t_tap: None,
            t_mul: None,
            t_add: None,
            t_relu: 1,
            t_memory: T::zero(),
        }
    }

    pub fn for_device(dev: &DeviceProfile) -> Self {
        Self::with_clock_period(T::of(dev.clock_period_s()))
    }

    /// Every delay zero; only the streamed frame and the half-porch term remain.
    pub fn zero_overhead(clk_period: T) -> Self {
        Self {
            clk_period,
            d_in: 0,
            d_out: 0,
            p_b: 0,
            p_f: 0,
            t_pad: Some(0),
            t_tap: Some(0),
            t_mul: Some(0),
            t_add: Some(0),
            t_relu: 0,
            t_memory: T::zero(),
        }
    }

    pub fn check(&self) -> Result<(), CostError> {
        if !(self.clk_period.is_finite() && self.clk_period > T::zero()) {
            return Err(CostError::IncompleteTerms(format!("clock period must be positive, got {}", self.clk_period)));
        }
        if !(self.t_memory.is_finite() && self.t_memory >= T::zero()) {
            return Err(CostError::IncompleteTerms(format!("t_memory must be non-negative, got {}", self.t_memory)));
        }
        Ok(())
    }

    pub fn resolve(&self, kernel: u64) -> ResolvedTerms {
        ResolvedTerms {
            d_in: self.d_in,
            d_out: self.d_out,
            p_b: self.p_b,
            p_f: self.p_f,
            t_pad: self.t_pad.unwrap_or(kernel.saturating_sub(1)),
            t_tap: self.t_tap.unwrap_or(kernel),
            t_mul: self.t_mul.unwrap_or(kernel),
            t_add: self.t_add.unwrap_or(ceil_log2(kernel * kernel) + 2),
            t_relu: self.t_relu,
        }
    }
}

/// JSON form of [`LatencyTerms`]; absent fields take the defaults, and the clock
/// period falls back to the device clock.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    pub clk_period_s: Option<f64>,
    pub d_in: Option<u64>,
    pub d_out: Option<u64>,
    pub p_b: Option<u64>,
    pub p_f: Option<u64>,
    pub t_pad: Option<u64>,
    pub t_tap: Option<u64>,
    pub t_mul: Option<u64>,
    pub t_add: Option<u64>,
    pub t_relu: Option<u64>,
    pub t_memory_s: Option<f64>,
}

impl LatencyConfig {
    pub fn from_json(text: &str) -> Result<Self, CostError> {
        serde_json::from_str(text).map_err(|e| CostError::IncompleteTerms(e.to_string()))
    }

    pub fn resolve<T: Scalar>(&self, dev: &DeviceProfile) -> Result<LatencyTerms<T>, CostError> {
        let mut t = LatencyTerms::<T>::for_device(dev);
        if let Some(c) = self.clk_period_s {
            t.clk_period = T::of(c);
        }
        t.d_in = self.d_in.unwrap_or(t.d_in);
        t.d_out = self.d_out.unwrap_or(t.d_out);
        t.p_b = self.p_b.unwrap_or(t.p_b);
        t.p_f = self.p_f.unwrap_or(t.p_f);
        t.t_pad = self.t_pad.or(t.t_pad);
        t.t_tap = self.t_tap.or(t.t_tap);
        t.t_mul = self.t_mul.or(t.t_mul);
        t.t_add = self.t_add.or(t.t_add);
        t.t_relu = self.t_relu.unwrap_or(t.t_relu);
        if let Some(m) = self.t_memory_s {
            t.t_memory = T::of(m);
        }
        t.check()?;
        Ok(t)
    }
}
