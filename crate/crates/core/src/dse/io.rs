// SPDX-License-Identifier: Apache-2.0

//! Front serialization: a flat CSV for plotting and a JSON manifest for downstream commands.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::{ConstraintSet, MogaConfig};
use super::explore::{FrontEntry, ParetoFront};
use super::DseError;
use crate::costmodel::LatencyTerms;
use crate::netgraph::{DeviceProfile, NetworkDocument, NetworkGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub allocation: String,
    pub latency_s: f64,
    pub dsp: u64,
    pub lut: u64,
    pub bram: u64,
    pub feasible_flag: u8,
}

impl CsvRow {
    fn of<T: Scalar>(e: &FrontEntry<T>) -> Self {
        Self {
            allocation: e.allocation.to_string(),
            latency_s: e.estimate.latency_s.as_f64(),
            dsp: e.estimate.dsp,
            lut: e.estimate.lut,
            bram: e.estimate.bram,
            feasible_flag: u8::from(e.feasible),
        }
    }
}

/// Feasible entries first, then near-feasible ones with `feasible_flag = 0`.
pub fn write_front_csv<T: Scalar, W: Write>(front: &ParetoFront<T>, out: W) -> Result<(), DseError> {
    let io = |e: csv::Error| DseError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    for e in front.entries.iter().chain(&front.near_feasible) {
        w.serialize(CsvRow::of(e)).map_err(io)?;
    }
    if front.entries.is_empty() && front.near_feasible.is_empty() {
        w.write_record(["allocation", "latency_s", "dsp", "lut", "bram", "feasible_flag"]).map_err(io)?;
    }
    w.flush().map_err(|e| DseError::Io(e.to_string()))
}

pub fn read_front_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, DseError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .map_err(|e| DseError::Io(e.to_string()))
}

/// Everything needed to re-estimate or morph a front entry without the original input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct FrontManifest<T> {
    pub network: NetworkDocument,
    pub device: DeviceProfile,
    pub terms: LatencyTerms<T>,
    pub constraints: ConstraintSet,
    pub config: MogaConfig,
    pub front: ParetoFront<T>,
}

impl<T: Scalar> FrontManifest<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DseError> {
        serde_json::from_str(text).map_err(|e| DseError::Io(e.to_string()))
    }

    pub fn graph(&self) -> Result<NetworkGraph, DseError> {
        NetworkGraph::from_document(&self.network).map_err(|e| DseError::Io(e.to_string()))
    }
}
