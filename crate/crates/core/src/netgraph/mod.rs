// SPDX-License-Identifier: Apache-2.0

//! Network description format, validation, shape propagation, and residual fusion.

mod builder;
mod device;
mod doc;
mod fuse;
mod graph;
mod layer;

pub use builder::{conv_pool_ladder, mnist_8_16_32, SequentialBuilder};
pub use device::DeviceProfile;
pub use doc::{LayerDoc, NetworkDocument};
pub use fuse::fuse_residual_blocks;
pub use graph::{parse_network, NetworkGraph, ResidualBlock};
pub use layer::{layer_output_shape, LayerKind, LayerOp, LayerSpec, PoolKind, Shape, Window};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("malformed network document: {0}")]
    MalformedDocument(String),
    #[error("shape mismatch at `{layer}`: {detail}")]
    ShapeMismatch { layer: String, detail: String },
    #[error("graph is not acyclic: {0}")]
    CyclicGraph(String),
    #[error("dangling connection: {0}")]
    DanglingConnection(String),
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("degenerate shape at `{layer}`: input {in_shape} with K={kernel}, S={stride}, P={padding}")]
    DegenerateShape { layer: String, in_shape: Shape, kernel: u64, stride: u64, padding: u64 },
    #[error("invalid device profile {0}")]
    InvalidDevice(String),
}
