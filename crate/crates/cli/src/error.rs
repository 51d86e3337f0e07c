// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::process::ExitCode;

use forgemorph_core::costmodel::CostError;
use forgemorph_core::distill::DistillError;
use forgemorph_core::dse::DseError;
use forgemorph_core::morph::MorphError;
use forgemorph_core::netgraph::GraphError;
use forgemorph_core::streamsim::SimError;

/// Command failure carrying its exit status class.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed, or out-of-range input. Exit 1.
    Input(String),
    /// Constraints admit no design. Exit 2.
    Infeasible(String),
    /// Output could not be written, or a core invariant broke. Exit 3.
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Internal(_) => 3,
        })
    }

    pub fn input(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }

    pub fn internal(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Internal(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<DseError> for CliError {
    fn from(e: DseError) -> Self {
        match e {
            DseError::NoFeasibleDesign(m) => CliError::Infeasible(format!("NoFeasibleDesign: {m}")),
            DseError::LengthMismatch { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_errors!(CostError, GraphError, MorphError, DistillError);

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
