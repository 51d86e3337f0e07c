// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::DseError;
use crate::costmodel::CostEstimate;
use crate::netgraph::{DeviceProfile, NetworkGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MogaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub seed: u64,
    /// Stop after this many generations without a hypervolume gain of at least `1e-6`.
    pub stagnation_window: usize,
    /// Step sizes are drawn as `u^p`; larger `p` keeps steps smaller.
    pub mutation_exponent: f64,
    /// Pins the FC gene instead of searching it.
    pub fixed_fc_pe: Option<u64>,
    /// Infeasible individuals whose normalized constraint excess is at most this are reported
    /// alongside the front, flagged infeasible.
    pub near_feasible_margin: f64,
    /// Evaluation threads; 0 uses every core. Results do not depend on it, so it is not serialized.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for MogaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.3,
            seed: 0,
            stagnation_window: 25,
            mutation_exponent: 4.0,
            fixed_fc_pe: None,
            near_feasible_margin: 0.25,
            jobs: 0,
        }
    }
}

impl MogaConfig {
    /// Defaults with the population sized to the network: 50 up to three conv layers, else 200.
    pub fn for_graph(g: &NetworkGraph) -> Self {
        let population_size = if g.conv_count() <= 3 { 50 } else { 200 };
        Self { population_size, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DseError> {
        let bad = |m: String| Err(DseError::InvalidConfig(m));
        if self.population_size < 2 {
            return bad(format!("population_size {} < 2", self.population_size));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} {r} outside [0, 1]"));
            }
        }
        if !(self.mutation_exponent.is_finite() && self.mutation_exponent > 0.0) {
            return bad(format!("mutation_exponent {} must be positive", self.mutation_exponent));
        }
        if self.fixed_fc_pe == Some(0) {
            return bad("fixed_fc_pe must be at least 1".into());
        }
        if self.near_feasible_margin.is_nan() || self.near_feasible_margin < 0.0 {
            return bad("near_feasible_margin must be non-negative".into());
        }
        Ok(())
    }
}

/// Upper bounds on the objectives; `None` leaves a dimension unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub max_latency_s: Option<f64>,
    pub max_dsp: Option<u64>,
    pub max_lut: Option<u64>,
    pub max_bram: Option<u64>,
}

impl ConstraintSet {
    /// Resource budgets of the device, no latency bound.
    pub fn from_device(dev: &DeviceProfile) -> Self {
        Self {
            max_latency_s: None,
            max_dsp: Some(dev.dsp_max),
            max_lut: Some(dev.lut_max),
            max_bram: Some(dev.bram_blocks_max),
        }
    }

    pub fn validate(&self) -> Result<(), DseError> {
        if let Some(t) = self.max_latency_s {
            if !(t.is_finite() && t > 0.0) {
                return Err(DseError::InvalidConfig(format!("max_latency_s {t} must be positive")));
            }
        }
        for (name, v) in [("max_dsp", self.max_dsp), ("max_lut", self.max_lut), ("max_bram", self.max_bram)] {
            if v == Some(0) {
                return Err(DseError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    fn excess(value: f64, bound: Option<f64>) -> f64 {
        bound.map_or(0.0, |b| ((value - b) / b).max(0.0))
    }

    /// Sum of relative overshoots of the resource budgets.
    pub fn resource_violation<T: Scalar>(&self, e: &CostEstimate<T>) -> f64 {
        Self::excess(e.dsp as f64, self.max_dsp.map(|v| v as f64))
            + Self::excess(e.lut as f64, self.max_lut.map(|v| v as f64))
            + Self::excess(e.bram as f64, self.max_bram.map(|v| v as f64))
    }

    /// Sum of relative overshoots over every active bound; zero exactly when feasible.
    pub fn violation<T: Scalar>(&self, e: &CostEstimate<T>) -> f64 {
        self.resource_violation(e) + Self::excess(e.latency_s.as_f64(), self.max_latency_s)
    }

    pub fn is_satisfied<T: Scalar>(&self, e: &CostEstimate<T>) -> bool {
        self.max_latency_s.is_none_or(|b| e.latency_s.as_f64() <= b)
            && self.max_dsp.is_none_or(|b| e.dsp <= b)
            && self.max_lut.is_none_or(|b| e.lut <= b)
            && self.max_bram.is_none_or(|b| e.bram <= b)
    }
}
