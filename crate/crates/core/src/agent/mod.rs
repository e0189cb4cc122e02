//! Agent-side motion: trajectory planners and the motion protocol that keeps
//! each agent inside the part of its region it may currently use.

mod motion;
mod planner;

use thiserror::Error;

use crate::graph::{GraphError, VertexId};

pub use motion::{
    advance_motion, on_communication, Activity, MotionLog, MotionMode, MotionState,
    OccupancyRecord, Transit,
};
pub use planner::{
    build_planner, GreedyErgodic, Move, Planner, PlannerContext, PlannerKind, RandomAdmissible,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("planner `{planner}` broke its contract for agent {agent} at t={time}: {reason}")]
    PlannerContract {
        planner: String,
        agent: usize,
        time: f64,
        reason: String,
    },
    #[error("agent {agent} at vertex {vertex} has no path back into its region")]
    NoRetreatPath { agent: usize, vertex: VertexId },
    #[error("horizon {horizon} is not after {now}")]
    BadHorizon { now: f64, horizon: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
