// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::loss::lr_decay;
use super::DistillError;
use crate::morph::LayerBlock;
use crate::netgraph::NetworkGraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct DistillParams<T> {
    pub lambda: T,
    pub tau: T,
    pub alpha0: T,
    pub gamma: T,
    /// Epochs per stage; every epoch runs a teacher pass followed by a student pass.
    pub epochs: u32,
}

impl<T: Scalar> Default for DistillParams<T> {
    fn default() -> Self {
        Self { lambda: T::of(0.5), tau: T::of(4.0), alpha0: T::of(0.01), gamma: T::of(0.9), epochs: 10 }
    }
}

impl<T: Scalar> DistillParams<T> {
    pub fn validate(&self) -> Result<(), DistillError> {
        let bad = |m: String| Err(DistillError::InvalidParam(m));
        if !(self.lambda >= T::zero() && self.lambda <= T::one()) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return bad(format!("tau {} must be positive", self.tau));
        }
        if !(self.alpha0 > T::zero() && self.alpha0.is_finite()) {
            return bad(format!("alpha0 {} must be positive", self.alpha0));
        }
        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            return bad(format!("gamma {} outside (0, 1)", self.gamma));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// One stage per block prefix.
    Depth,
    /// One stage per width fraction; the ladder must be increasing and end at 1.
    Width(Vec<f64>),
}

/// Learning rates for one epoch of a stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct EpochLr<T> {
    pub epoch: u32,
    /// Step size of both the teacher and the student pass, `α_0 / 10^(e-1)`.
    pub lr: T,
    /// Decay factor `γ^e` applied to blocks trained in earlier stages.
    pub decay: T,
    /// `α_0 · γ^e`, the resulting rate of those earlier blocks.
    pub earlier_blocks_lr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Stage<T> {
    pub active_blocks: Vec<String>,
    /// Active filters per conv layer of the stage network.
    pub active_widths: Vec<u64>,
    /// Teacher passes train the full stage network on cross-entropy.
    pub teacher_epochs: u32,
    /// Student passes train the sub-network on `λ·L_GT + (1 - λ)·L_KD`.
    pub student_epochs: u32,
    pub lambda: T,
    pub tau: T,
    pub lr_plan: Vec<EpochLr<T>>,
    /// Blocks trained in previous stages, which receive the decayed rate.
    pub earlier_blocks: Vec<String>,
    /// The student is folded back into the full network when the stage ends. How weights are
    /// reconciled is left to the trainer.
    pub merge_after: bool,
    /// Stage term of the global objective: `L_GT + L_total`.
    pub objective: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct MorphingSchedule<T> {
    pub stages: Vec<Stage<T>>,
}

impl<T: Scalar> MorphingSchedule<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DistillError> {
        serde_json::from_str(text).map_err(|e| DistillError::InvalidParam(e.to_string()))
    }
}

fn lr_plan<T: Scalar>(p: &DistillParams<T>) -> Vec<EpochLr<T>> {
    let ten = T::of(10.0);
    (1..=p.epochs)
        .map(|e| EpochLr {
            epoch: e,
            lr: p.alpha0 / ten.powi(e as i32 - 1),
            decay: p.gamma.powi(e as i32),
            earlier_blocks_lr: lr_decay(p.alpha0, p.gamma, e),
        })
        .collect()
}

/// Staged growth plan: block prefixes for depth, a width ladder for width.
pub fn build_schedule<T: Scalar>(
    g: &NetworkGraph,
    blocks: &[LayerBlock],
    kind: &ScheduleKind,
    params: &DistillParams<T>,
) -> Result<MorphingSchedule<T>, DistillError> {
    if blocks.is_empty() {
        return Err(DistillError::EmptyBlocks);
    }
    params.validate()?;
    let names: Vec<String> = blocks.iter().map(|b| b.block_id.clone()).collect();
    let filters_in = |ids: &[&LayerBlock]| -> Vec<u64> {
        ids.iter()
            .flat_map(|b| b.layer_ids.iter())
            .filter_map(|id| g.index_of(id).and_then(|i| g.layer(i).filters()))
            .collect()
    };
    let stage = |active: Vec<String>, widths: Vec<u64>, earlier: Vec<String>, last: bool| Stage {
        active_blocks: active,
        active_widths: widths,
        teacher_epochs: params.epochs,
        student_epochs: params.epochs,
        lambda: params.lambda,
        tau: params.tau,
        lr_plan: lr_plan(params),
        earlier_blocks: earlier,
        merge_after: !last,
        objective: "L_GT + L_total".into(),
    };
    let stages = match kind {
        ScheduleKind::Depth => (1..=blocks.len())
            .map(|i| {
                let active: Vec<&LayerBlock> = blocks[..i].iter().collect();
                stage(names[..i].to_vec(), filters_in(&active), names[..i - 1].to_vec(), i == blocks.len())
            })
            .collect(),
        ScheduleKind::Width(ladder) => {
            let ok = !ladder.is_empty()
                && ladder.iter().all(|&f| f > 0.0 && f <= 1.0)
                && ladder.windows(2).all(|w| w[0] < w[1])
                && ladder.last() == Some(&1.0);
            if !ok {
                return Err(DistillError::InvalidParam(format!(
                    "width ladder {ladder:?} must be increasing within (0, 1] and end at 1"
                )));
            }
            let all: Vec<&LayerBlock> = blocks.iter().collect();
            let full = filters_in(&all);
            ladder
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    let widths: Vec<u64> =
                        full.iter().map(|&n| ((f * n as f64 + 1e-9).floor() as u64).max(1)).collect();
                    let earlier = if i == 0 { Vec::new() } else { names.clone() };
                    stage(names.clone(), widths, earlier, i + 1 == ladder.len())
                })
                .collect()
        }
    };
    Ok(MorphingSchedule { stages })
}
