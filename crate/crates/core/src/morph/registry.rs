// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::modes::MorphMode;
use super::MorphError;
use crate::costmodel::PEAllocation;
use crate::scalar::Scalar;

/// On-disk list of modes derived from one base allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct MorphManifest<T> {
    pub base_config: PEAllocation,
    pub modes: Vec<MorphMode<T>>,
}

impl<T: Scalar> MorphManifest<T> {
    pub fn new(base_config: PEAllocation) -> Self {
        Self { base_config, modes: Vec::new() }
    }

    /// Replaces a mode of the same name or appends a new one.
    pub fn upsert(&mut self, mode: MorphMode<T>) {
        match self.modes.iter_mut().find(|m| m.name == mode.name) {
            Some(slot) => *slot = mode,
            None => self.modes.push(mode),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MorphError> {
        serde_json::from_str(text).map_err(|e| MorphError::Io(e.to_string()))
    }
}

/// Mode table for a running design: many concurrent readers, exclusive writers.
#[derive(Debug, Default)]
pub struct ModeRegistry<T> {
    modes: RwLock<BTreeMap<String, MorphMode<T>>>,
}

impl<T: Scalar> ModeRegistry<T> {
    pub fn new() -> Self {
        Self { modes: RwLock::new(BTreeMap::new()) }
    }

    pub fn insert(&self, mode: MorphMode<T>) -> Option<MorphMode<T>> {
        self.modes.write().expect("registry lock").insert(mode.name.clone(), mode)
    }

    pub fn get(&self, name: &str) -> Option<MorphMode<T>> {
        self.modes.read().expect("registry lock").get(name).cloned()
    }

    pub fn names(&self) -> Vec<String> {
        self.modes.read().expect("registry lock").keys().cloned().collect()
    }

    pub fn manifest(&self, base_config: PEAllocation) -> MorphManifest<T> {
        let modes = self.modes.read().expect("registry lock").values().cloned().collect();
        MorphManifest { base_config, modes }
    }
}
