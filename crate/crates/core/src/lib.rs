// SPDX-License-Identifier: Apache-2.0

//! Design-space exploration for streaming CNN accelerators on FPGAs.
//!
//! The pipeline runs from a JSON network description ([`netgraph`]) through an
//! analytical cost model ([`costmodel`]) validated against a cycle-counting
//! stream simulator ([`streamsim`]), a constrained multi-objective genetic
//! search over PE allocations ([`dse`]), runtime depth/width morphing modes
//! ([`morph`]), and the loss and schedule math for training morphable
//! networks ([`distill`]).

pub mod costmodel;
pub mod distill;
pub mod dse;
pub mod morph;
pub mod netgraph;
pub mod scalar;
pub mod streamsim;

pub use scalar::{Cycles, Scalar};

pub type LatencyTermsF64 = costmodel::LatencyTerms<f64>;
pub type LatencyTermsF32 = costmodel::LatencyTerms<f32>;
pub type CostEstimateF64 = costmodel::CostEstimate<f64>;
pub type CostEstimateF32 = costmodel::CostEstimate<f32>;
pub type ParetoFrontF64 = dse::ParetoFront<f64>;
pub type ParetoFrontF32 = dse::ParetoFront<f32>;
pub type FrontManifestF64 = dse::FrontManifest<f64>;
pub type MorphableDesignF64 = morph::MorphableDesign<f64>;
pub type MorphModeF64 = morph::MorphMode<f64>;
pub type MorphManifestF64 = morph::MorphManifest<f64>;
pub type PowerModelF64 = morph::PowerModel<f64>;
pub type PowerModelF32 = morph::PowerModel<f32>;
pub type DistillParamsF64 = distill::DistillParams<f64>;
pub type MorphingScheduleF64 = distill::MorphingSchedule<f64>;
