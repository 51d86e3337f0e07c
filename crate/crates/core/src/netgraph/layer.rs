// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::GraphError;

/// Feature-map shape as `(height, width, channels)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u64; 3]", into = "[u64; 3]")]
pub struct Shape {
    pub height: u64,
    pub width: u64,
    pub channels: u64,
}

impl Shape {
    pub const fn new(height: u64, width: u64, channels: u64) -> Self {
        Self { height, width, channels }
    }

    pub fn elements(&self) -> u64 {
        self.height * self.width * self.channels
    }
}

impl From<[u64; 3]> for Shape {
    fn from(v: [u64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Shape> for [u64; 3] {
    fn from(s: Shape) -> Self {
        [s.height, s.width, s.channels]
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    Conv,
    MaxPool,
    AvgPool,
    FullyConnected,
    ResidualAdd,
    Input,
    Output,
}

impl LayerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayerKind::Conv => "Conv",
            LayerKind::MaxPool => "MaxPool",
            LayerKind::AvgPool => "AvgPool",
            LayerKind::FullyConnected => "FullyConnected",
            LayerKind::ResidualAdd => "ResidualAdd",
            LayerKind::Input => "Input",
            LayerKind::Output => "Output",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoolKind {
    Max,
    Avg,
}

/// Sliding-window geometry shared by convolution and pooling (square kernels).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub kernel: u64,
    pub stride: u64,
    pub padding: u64,
}

impl Window {
    pub fn new(kernel: u64, stride: u64, padding: u64) -> Self {
        Self { kernel, stride, padding }
    }

    /// `floor((len + 2P - K) / S) + 1`, or `None` when the window does not fit.
    pub fn output_len(&self, len: u64) -> Option<u64> {
        let padded = len + 2 * self.padding;
        if self.kernel == 0 || self.stride == 0 || padded < self.kernel {
            return None;
        }
        Some((padded - self.kernel) / self.stride + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerOp {
    Input,
    Output,
    Conv { filters: u64, window: Window },
    Pool { kind: PoolKind, window: Window },
    FullyConnected { fc_in: u64, fc_out: u64 },
    ResidualAdd,
}

/// One layer with its resolved input shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub id: String,
    pub op: LayerOp,
    pub in_shape: Shape,
}

impl LayerSpec {
    pub fn kind(&self) -> LayerKind {
        match self.op {
            LayerOp::Input => LayerKind::Input,
            LayerOp::Output => LayerKind::Output,
            LayerOp::Conv { .. } => LayerKind::Conv,
            LayerOp::Pool { kind: PoolKind::Max, .. } => LayerKind::MaxPool,
            LayerOp::Pool { kind: PoolKind::Avg, .. } => LayerKind::AvgPool,
            LayerOp::FullyConnected { .. } => LayerKind::FullyConnected,
            LayerOp::ResidualAdd => LayerKind::ResidualAdd,
        }
    }

    pub fn window(&self) -> Option<Window> {
        match self.op {
            LayerOp::Conv { window, .. } | LayerOp::Pool { window, .. } => Some(window),
            _ => None,
        }
    }

    pub fn filters(&self) -> Option<u64> {
        match self.op {
            LayerOp::Conv { filters, .. } => Some(filters),
            _ => None,
        }
    }

    pub fn is_conv(&self) -> bool {
        matches!(self.op, LayerOp::Conv { .. })
    }

    pub fn is_fc(&self) -> bool {
        matches!(self.op, LayerOp::FullyConnected { .. })
    }

    /// Conv, pool, and residual-add layers: the streaming backbone.
    pub fn is_backbone(&self) -> bool {
        matches!(self.op, LayerOp::Conv { .. } | LayerOp::Pool { .. } | LayerOp::ResidualAdd)
    }

    pub fn output_shape(&self) -> Result<Shape, GraphError> {
        layer_output_shape(self)
    }
}

/// Output shape of a layer given its input shape.
///
/// Conv and pool layers follow `floor((in + 2P - K) / S) + 1`; conv layers emit
/// `filters` channels, pools keep the input channel count.
pub fn layer_output_shape(l: &LayerSpec) -> Result<Shape, GraphError> {
    let s = l.in_shape;
    match l.op {
        LayerOp::Conv { filters, window } => {
            let (h, w) = window_out(l, window)?;
            Ok(Shape::new(h, w, filters))
        }
        LayerOp::Pool { window, .. } => {
            let (h, w) = window_out(l, window)?;
            Ok(Shape::new(h, w, s.channels))
        }
        LayerOp::FullyConnected { fc_out, .. } => Ok(Shape::new(1, 1, fc_out)),
        LayerOp::Input | LayerOp::Output | LayerOp::ResidualAdd => Ok(s),
    }
}

fn window_out(l: &LayerSpec, window: Window) -> Result<(u64, u64), GraphError> {
    let degenerate = || GraphError::DegenerateShape {
        layer: l.id.clone(),
        in_shape: l.in_shape,
        kernel: window.kernel,
        stride: window.stride,
        padding: window.padding,
    };
    let h = window.output_len(l.in_shape.height).ok_or_else(degenerate)?;
    let w = window.output_len(l.in_shape.width).ok_or_else(degenerate)?;
    Ok((h, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(h: u64, w: u64, k: u64, s: u64, p: u64) -> LayerSpec {
        LayerSpec {
            id: "c".into(),
            op: LayerOp::Conv { filters: 4, window: Window::new(k, s, p) },
            in_shape: Shape::new(h, w, 1),
        }
    }

    #[test]
    fn same_padding_keeps_size() {
        assert_eq!(layer_output_shape(&conv(28, 28, 3, 1, 1)).unwrap(), Shape::new(28, 28, 4));
    }

    #[test]
    fn stride_two_halves() {
        let pool = LayerSpec {
            id: "p".into(),
            op: LayerOp::Pool { kind: PoolKind::Max, window: Window::new(2, 2, 0) },
            in_shape: Shape::new(32, 32, 3),
        };
        assert_eq!(layer_output_shape(&pool).unwrap(), Shape::new(16, 16, 3));
    }

    #[test]
    fn oversized_kernel_is_degenerate() {
        let err = layer_output_shape(&conv(5, 5, 7, 1, 0)).unwrap_err();
        assert!(matches!(err, GraphError::DegenerateShape { .. }));
    }

    #[test]
    fn odd_sizes_floor() {
        // 7 -> floor((7 - 2) / 2) + 1 = 3
        assert_eq!(Window::new(2, 2, 0).output_len(7), Some(3));
    }
}
