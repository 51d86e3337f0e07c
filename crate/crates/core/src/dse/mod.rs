// SPDX-License-Identifier: Apache-2.0

//! Constrained multi-objective genetic search over PE allocations.

mod config;
mod explore;
mod genome;
mod io;
mod sort;

pub use config::{ConstraintSet, MogaConfig};
pub use explore::{evaluate, explore, FrontEntry, ParetoFront};
pub use genome::{crossover, initial_population_for, initialize_population, mutate, mutate_gene, GenomeBounds};
pub use io::{read_front_csv, write_front_csv, CsvRow, FrontManifest};
pub use sort::{crowding_distance, dominates, hypervolume_2d, non_dominated_sort, Fitness};

use crate::costmodel::CostError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DseError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("no feasible design: {0}")]
    NoFeasibleDesign(String),
    #[error("genome length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("front I/O: {0}")]
    Io(String),
}
