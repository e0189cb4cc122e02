//! Deterministic discrete-event harness.
//!
//! A run drives every agent and the base station from one event loop,
//! checks the safety and optimality guarantees at every event and records
//! a trace from which metrics and plot data are derived.

mod batch;
mod collision;
mod config;
mod export;
mod metrics;
mod run;
mod schedule;
mod trace;

use std::fmt;

use thiserror::Error;

use crate::agent::MotionError;
use crate::coverage::CoverageError;
use crate::graph::GraphError;
use crate::likelihood::LikelihoodError;

pub use batch::{run_batch, BatchItem};
pub use collision::{detect_collision, Collision};
pub use config::{GraphSpec, GridSpec, PreparedConfig, SimConfig};
pub use export::{write_outputs, CsvTables, CSV_SCHEMA_VERSION};
pub use metrics::{compute_metrics, total_variation, Metrics};
pub use run::{run, run_prepared, run_with_planners, SimOptions};
pub use schedule::CommScheduler;
pub use trace::{
    CheckKind, ConvergenceReport, CostSample, Event, EventKind, OccupancyCheckpoint, RetreatRecord,
    RuntimeViolation, SimTrace, UncoveredInterval,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("communication schedule: {0}")]
    Schedule(String),
    #[error("violation at t={time}: {check}: {detail}")]
    Violation {
        time: f64,
        check: CheckKind,
        detail: String,
    },
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
