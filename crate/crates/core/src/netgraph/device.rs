// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::GraphError;

/// Target FPGA resource budget and clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    #[serde(default)]
    pub name: String,
    pub dsp_max: u64,
    pub lut_max: u64,
    /// 18 Kb blocks.
    pub bram_blocks_max: u64,
    pub clock_hz: f64,
    /// Fixed-point width in bits: 8 or 16.
    pub fp_rep: u32,
}

const ZYNQ7100: &str = include_str!("../../data/devices/zynq7100.json");

impl DeviceProfile {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: &str| Err(GraphError::InvalidDevice(format!("{}: {m}", self.name)));
        if self.dsp_max == 0 || self.lut_max == 0 || self.bram_blocks_max == 0 {
            return bad("resource budgets must be positive");
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad("clock_hz must be positive");
        }
        if self.fp_rep != 8 && self.fp_rep != 16 {
            return bad("fp_rep must be 8 or 16");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let dev: Self = serde_json::from_str(text).map_err(|e| GraphError::MalformedDocument(e.to_string()))?;
        dev.validate()?;
        Ok(dev)
    }

    /// Zynq-7100 at 250 MHz, int16.
    pub fn zynq7100() -> Self {
        Self::from_json(ZYNQ7100).expect("bundled profile is valid")
    }

    pub fn clock_period_s(&self) -> f64 {
        1.0 / self.clock_hz
    }
}
