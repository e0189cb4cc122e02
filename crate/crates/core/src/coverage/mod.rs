//! Base-station side of the partitioning scheme.
//!
//! The base station owns the global covering, generators, owner labels and
//! timers. Each exchange with an agent runs [`base_update`], which may grow
//! the agent's region into neighbours whose timers have expired, move its
//! generator, and re-arm the timers that keep reassigned vertices free of
//! collisions.

mod additive;
mod cost;
mod invariants;
mod pareto;
mod state;
mod update;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, VertexId};

pub use additive::{additive_subset, AdditiveSubset};
pub use cost::{coverage_cost, covering_cost};
pub use invariants::{check_state_invariants, Clause, Violation};
pub use pareto::{
    pareto_certificate, ParetoCertificate, ParetoMode, ParetoWitness, EXHAUSTIVE_MAX_AGENTS,
    EXHAUSTIVE_MAX_VERTICES,
};
pub use state::{
    init_state, AgentPayload, BaseStationState, StateSnapshot, SNAPSHOT_SCHEMA, SNAPSHOT_VERSION,
};
pub use update::{
    base_update, timer_update, ClaimedFrom, TimerUpdate, UpdateBranch, UpdateOutcome,
};

pub type AgentId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("invalid mission parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} generators, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("generators must be distinct; vertex {0} repeated")]
    DuplicateGenerator(VertexId),
    #[error("vertex {0} does not exist")]
    UnknownVertex(VertexId),
    #[error("initial cell of agent {0} is empty")]
    EmptyCell(AgentId),
    #[error("initial cell of agent {0} is disconnected")]
    DisconnectedCell(AgentId),
    #[error("agent {0} out of range")]
    AgentOutOfRange(AgentId),
    #[error("vertex {vertex} is not owned by agent {agent}")]
    NotOwned { agent: AgentId, vertex: VertexId },
    #[error("additive subset ill-posed for agent {agent}: {reason}")]
    IllPosed { agent: AgentId, reason: String },
    #[error("vacate distance unreachable for agent {agent} at vertex {vertex}")]
    UnreachableCore { agent: AgentId, vertex: VertexId },
    #[error("covering is not an m-partition")]
    NotPartition,
    #[error("exhaustive check supports at most {max_vertices} vertices and {max_agents} agents")]
    SizeLimit {
        max_vertices: usize,
        max_agents: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Speeds and the communication and timing constants of a mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionParams {
    /// Maximum speed of each agent, distance per unit time.
    pub speeds: Vec<f64>,
    /// Upper bound on a single agent's time between exchanges.
    pub delta_bar: f64,
    /// Lower bound on the time between any two exchanges.
    pub delta_lower: f64,
    /// Hold time added to the communicating agent's timer.
    pub delta_h: f64,
}

impl MissionParams {
    pub fn agent_count(&self) -> usize {
        self.speeds.len()
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        if self.speeds.is_empty() {
            return Err(CoverageError::InvalidParams(
                "at least one agent is required".into(),
            ));
        }
        if let Some(s) = self.speeds.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(CoverageError::InvalidParams(format!(
                "speed {s} is not positive"
            )));
        }
        for (name, v) in [
            ("delta_bar", self.delta_bar),
            ("delta_lower", self.delta_lower),
            ("delta_h", self.delta_h),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CoverageError::InvalidParams(format!(
                    "{name} = {v} is not positive"
                )));
            }
        }
        let m = self.agent_count() as f64;
        if self.delta_bar < m * self.delta_lower {
            return Err(CoverageError::InvalidParams(format!(
                "schedule infeasible: delta_bar {} < m * delta_lower = {}",
                self.delta_bar,
                m * self.delta_lower
            )));
        }
        Ok(())
    }
}
