// SPDX-License-Identifier: Apache-2.0

//! The JSON network document and its conversion to typed layers.

use serde::{Deserialize, Serialize};

use super::layer::{LayerKind, LayerOp, PoolKind, Shape, Window};
use super::GraphError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub name: String,
    pub layers: Vec<LayerDoc>,
    #[serde(default)]
    pub connections: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub id: String,
    pub kind: LayerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_shape: Option<Shape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_out: Option<u64>,
}

impl LayerDoc {
    pub fn new(id: impl Into<String>, kind: LayerKind) -> Self {
        Self {
            id: id.into(),
            kind,
            filters: None,
            kernel: None,
            stride: None,
            padding: None,
            in_shape: None,
            fc_in: None,
            fc_out: None,
        }
    }
}

/// A layer whose shape is not yet propagated. `fc_in` may be left for inference.
#[derive(Debug, Clone)]
pub(crate) struct RawLayer {
    pub id: String,
    pub op: LayerOp,
    pub declared_shape: Option<Shape>,
    pub declared_fc_in: Option<u64>,
}

impl NetworkDocument {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::MalformedDocument(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("network document serializes")
    }
}

fn forbid(doc: &LayerDoc, name: &str, present: bool) -> Result<(), GraphError> {
    if present {
        return Err(GraphError::MalformedDocument(format!(
            "layer `{}` ({}): field `{}` is not valid for this kind",
            doc.id,
            doc.kind.as_str(),
            name
        )));
    }
    Ok(())
}

fn require(doc: &LayerDoc, name: &str, v: Option<u64>, min: u64) -> Result<u64, GraphError> {
    match v {
        None => Err(GraphError::MalformedDocument(format!(
            "layer `{}` ({}): missing `{}`",
            doc.id,
            doc.kind.as_str(),
            name
        ))),
        Some(x) if x < min => {
            Err(GraphError::MalformedDocument(format!("layer `{}`: `{}` must be >= {}, got {}", doc.id, name, min, x)))
        }
        Some(x) => Ok(x),
    }
}

fn window(doc: &LayerDoc) -> Result<Window, GraphError> {
    let kernel = require(doc, "kernel", doc.kernel, 1)?;
    let stride = require(doc, "stride", doc.stride.or(Some(1)), 1)?;
    let padding = doc.padding.unwrap_or(0);
    Ok(Window::new(kernel, stride, padding))
}

impl LayerDoc {
    pub(crate) fn to_raw(&self) -> Result<RawLayer, GraphError> {
        if self.id.is_empty() {
            return Err(GraphError::MalformedDocument("layer with empty id".into()));
        }
        let conv_fields =
            self.filters.is_some() || self.kernel.is_some() || self.stride.is_some() || self.padding.is_some();
        let fc_fields = self.fc_in.is_some() || self.fc_out.is_some();
        let op = match self.kind {
            LayerKind::Input => {
                forbid(self, "conv/pool parameters", conv_fields)?;
                forbid(self, "fc_in/fc_out", fc_fields)?;
                let s = self.in_shape.ok_or_else(|| {
                    GraphError::MalformedDocument(format!("input layer `{}` requires `in_shape`", self.id))
                })?;
                if s.height == 0 || s.width == 0 || s.channels == 0 {
                    return Err(GraphError::MalformedDocument(format!(
                        "input layer `{}` has an empty shape {}",
                        self.id, s
                    )));
                }
                LayerOp::Input
            }
            LayerKind::Output | LayerKind::ResidualAdd => {
                forbid(self, "conv/pool parameters", conv_fields)?;
                forbid(self, "fc_in/fc_out", fc_fields)?;
                if self.kind == LayerKind::Output {
                    LayerOp::Output
                } else {
                    LayerOp::ResidualAdd
                }
            }
            LayerKind::Conv => {
                forbid(self, "fc_in/fc_out", fc_fields)?;
                let filters = require(self, "filters", self.filters, 1)?;
                LayerOp::Conv { filters, window: window(self)? }
            }
            LayerKind::MaxPool | LayerKind::AvgPool => {
                forbid(self, "fc_in/fc_out", fc_fields)?;
                forbid(self, "filters", self.filters.is_some())?;
                let kind = if self.kind == LayerKind::MaxPool { PoolKind::Max } else { PoolKind::Avg };
                LayerOp::Pool { kind, window: window(self)? }
            }
            LayerKind::FullyConnected => {
                forbid(self, "conv/pool parameters", conv_fields)?;
                let fc_out = require(self, "fc_out", self.fc_out, 1)?;
                // fc_in is checked against the flattened producer shape during propagation
                LayerOp::FullyConnected { fc_in: self.fc_in.unwrap_or(0), fc_out }
            }
        };
        Ok(RawLayer { id: self.id.clone(), op, declared_shape: self.in_shape, declared_fc_in: self.fc_in })
    }
}
