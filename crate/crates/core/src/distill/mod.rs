// SPDX-License-Identifier: Apache-2.0

//! Loss math and growth schedules for training morphable networks with self-distillation.
//!
//! Nothing here trains a network. The losses and their gradients are exact, framework-free
//! numerics; the schedule is exported as JSON for an external trainer.

mod loss;
mod schedule;

pub use loss::{
    cross_entropy, cross_entropy_grad, kd_grad, kd_loss, log_softmax, lr_decay, softened, softmax, stage_objective,
    total_loss, LogitVector,
};
pub use schedule::{build_schedule, DistillParams, EpochLr, MorphingSchedule, ScheduleKind, Stage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistillError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("schedule needs at least one block")]
    EmptyBlocks,
}
