// SPDX-License-Identifier: Apache-2.0

//! Runtime morphing: depth-wise block truncation, width-wise filter gating, and a calibrated
//! power model over active resources.

mod blocks;
mod modes;
mod power;
mod registry;

pub use blocks::{default_boundaries, partition_blocks, HeadSpec, LayerBlock};
pub use modes::{ModeKind, ModeParams, ModeSpec, MorphMode, MorphableDesign};
pub use power::{fit_power_model, predict_power, read_calibration_csv, PowerModel, PowerSample};
pub use registry::{ModeRegistry, MorphManifest};

use crate::costmodel::CostError;
use crate::netgraph::GraphError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MorphError {
    #[error("invalid block boundary: {0}")]
    InvalidCut(String),
    #[error("empty layer block: {0}")]
    EmptyBlock(String),
    #[error("mode out of range: {0}")]
    OutOfRange(String),
    #[error("width fraction {fraction} leaves `{layer}` without filters")]
    TooNarrow { layer: String, fraction: f64 },
    #[error("degenerate power fit: {0}")]
    DegenerateFit(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("morph I/O: {0}")]
    Io(String),
}
