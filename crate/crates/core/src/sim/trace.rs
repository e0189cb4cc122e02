use std::fmt;

use serde::Serialize;

use super::collision::Collision;
use crate::coverage::{BaseStationState, Clause, StateSnapshot};
use crate::graph::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Comm,
    Arrival,
    LikelihoodSwitch,
    Convergence,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Comm => "comm",
            EventKind::Arrival => "arrival",
            EventKind::LikelihoodSwitch => "likelihood-switch",
            EventKind::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub agent: Option<usize>,
}

/// `H` right after an exchange, a likelihood switch, or at the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSample {
    pub time: f64,
    pub cost: f64,
    /// Index of the likelihood segment the sample belongs to.
    pub segment: usize,
}

/// A maximal interval during which a vertex lay in no active region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncoveredInterval {
    pub vertex: VertexId,
    pub start: f64,
    pub end: f64,
}

impl UncoveredInterval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Which runtime check fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// A structural property of the base-station state.
    StateInvariant,
    /// An update was attempted with ill-posed inputs.
    WellPosedness,
    Collision,
    /// Cost of the identifier partition differs from the cost of the covering.
    CostIdentity,
    /// Cost went up between two updates under the same likelihood.
    CostIncrease,
    /// A vertex stayed uncovered for too long.
    UncoveredBound,
    /// A vertex released from a prohibited region lost coverage too soon.
    HoldProtection,
    /// A retreat path vertex was not protected for the whole retreat.
    RetreatSafety,
    /// A retreat took longer than the vacate bound.
    RetreatDuration,
    /// An agent stood where the motion protocol does not allow.
    Position,
    /// Exchange spacing broke the protocol bounds.
    Protocol,
    /// The covering changed after convergence was declared.
    ConvergenceLost,
    /// The converged pair failed the local optimality certificate.
    ParetoLocal,
}

impl CheckKind {
    pub const ALL: [CheckKind; 13] = [
        CheckKind::StateInvariant,
        CheckKind::WellPosedness,
        CheckKind::Collision,
        CheckKind::CostIdentity,
        CheckKind::CostIncrease,
        CheckKind::UncoveredBound,
        CheckKind::HoldProtection,
        CheckKind::RetreatSafety,
        CheckKind::RetreatDuration,
        CheckKind::Position,
        CheckKind::Protocol,
        CheckKind::ConvergenceLost,
        CheckKind::ParetoLocal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::StateInvariant => "state-invariant",
            CheckKind::WellPosedness => "well-posedness",
            CheckKind::Collision => "collision",
            CheckKind::CostIdentity => "cost-identity",
            CheckKind::CostIncrease => "cost-increase",
            CheckKind::UncoveredBound => "uncovered-bound",
            CheckKind::HoldProtection => "hold-protection",
            CheckKind::RetreatSafety => "retreat-safety",
            CheckKind::RetreatDuration => "retreat-duration",
            CheckKind::Position => "position",
            CheckKind::Protocol => "protocol",
            CheckKind::ConvergenceLost => "convergence-lost",
            CheckKind::ParetoLocal => "pareto-local",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeViolation {
    pub time: f64,
    pub check: CheckKind,
    /// Set for state-invariant failures.
    pub clause: Option<Clause>,
    pub detail: String,
}

impl fmt::Display for RuntimeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={}: {}: {}",
            self.time,
            self.check.as_str(),
            self.detail
        )
    }
}

/// Detected settling of the covering within one likelihood segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub segment: usize,
    /// Last time the covering or a generator changed (or the segment start).
    pub static_since: f64,
    /// Exchange at which every agent had confirmed the configuration.
    pub detected_at: f64,
}

/// Occupancy accumulated up to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyCheckpoint {
    pub time: f64,
    /// Agent-time spent at each vertex.
    pub occupancy: Vec<f64>,
}

/// Retreat executed after a vertex under an agent was reassigned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetreatRecord {
    pub agent: usize,
    pub time: f64,
    pub path: Vec<VertexId>,
    /// When the agent is due to reach the end of the path.
    pub finish: f64,
    /// Latest finish the vacate bound allows.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub duration: f64,
    pub agent_count: usize,
    pub events: Vec<Event>,
    pub cost_samples: Vec<CostSample>,
    /// Agent-time spent at each vertex over the whole run.
    pub occupancy: Vec<f64>,
    pub checkpoints: Vec<OccupancyCheckpoint>,
    /// Per-vertex uncovered intervals, in time order.
    pub uncovered: Vec<Vec<UncoveredInterval>>,
    pub collisions: Vec<Collision>,
    pub violations: Vec<RuntimeViolation>,
    pub convergence: Vec<ConvergenceReport>,
    pub retreats: Vec<RetreatRecord>,
    pub snapshots: Vec<StateSnapshot>,
    /// Largest `|H(c,P^ID) − H(c,P)|` seen after any update.
    pub max_cost_identity_gap: f64,
    pub final_state: BaseStationState,
}

impl SimTrace {
    pub fn comm_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Comm)
            .count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.collisions.is_empty()
    }
}
