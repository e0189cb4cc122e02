use serde::Serialize;

use super::{MotionError, Move, Planner, PlannerContext};
use crate::coverage::AgentPayload;
use crate::graph::{EnvironmentGraph, VertexId};
use crate::likelihood::{AgentTimingView, LikelihoodMode, LikelihoodSchedule};
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transit {
    pub from: VertexId,
    pub to: VertexId,
    pub depart: f64,
    pub arrive: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionMode {
    Normal,
    /// Following a precomputed path back into the agent's region.
    Retreat,
}

/// What the agent is doing between decision instants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Activity {
    /// Crossing an edge at full speed.
    Transit(Transit),
    /// Sitting at `current_vertex` until the given time, then deciding again.
    Waiting { until: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionState {
    pub agent: usize,
    pub speed: f64,
    /// Last vertex reached; while in transit this is the departure vertex.
    pub current_vertex: VertexId,
    pub activity: Activity,
    pub mode: MotionMode,
    /// Remaining retreat path. Its head is the current vertex or, in
    /// transit, the vertex being approached.
    pub retreat_path: Vec<VertexId>,
    pub visit_counts: Vec<u64>,
}

/// `vertex` was occupied by `agent` on `[enter, exit)`. While crossing an
/// edge the agent occupies both endpoints with `share` 0.5 each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancyRecord {
    pub agent: usize,
    pub vertex: VertexId,
    pub enter: f64,
    pub exit: f64,
    pub share: f64,
}

/// What happened to one agent over an interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotionLog {
    pub records: Vec<OccupancyRecord>,
    /// `(time, vertex)` of every completed edge traversal.
    pub arrivals: Vec<(f64, VertexId)>,
}

impl MotionState {
    /// An agent parked at `start`, due to decide immediately.
    pub fn new(agent: usize, speed: f64, start: VertexId, vertex_count: usize) -> Self {
        let mut visit_counts = vec![0; vertex_count];
        visit_counts[start] = 1;
        Self {
            agent,
            speed,
            current_vertex: start,
            activity: Activity::Waiting { until: 0.0 },
            mode: MotionMode::Normal,
            retreat_path: Vec::new(),
            visit_counts,
        }
    }

    pub fn transit(&self) -> Option<Transit> {
        match self.activity {
            Activity::Transit(t) => Some(t),
            Activity::Waiting { .. } => None,
        }
    }

    /// Where the agent will be once any ongoing transit completes.
    pub fn settled_vertex(&self) -> VertexId {
        self.transit().map_or(self.current_vertex, |t| t.to)
    }

    /// Vertices occupied right now.
    pub fn occupied(&self) -> Vec<VertexId> {
        match self.transit() {
            Some(t) => vec![t.from, t.to],
            None => vec![self.current_vertex],
        }
    }

    /// Next instant at which this agent changes what it occupies or decides.
    pub fn next_internal_event(&self) -> f64 {
        match self.activity {
            Activity::Transit(t) => t.arrive,
            Activity::Waiting { until } => until,
        }
    }
}

/// Reacts to a fresh payload from the base station at time `t`.
///
/// If the agent's position (the vertex being approached, when in transit) is
/// no longer in its region, a shortest path through `old_region` into the
/// new region is fixed now and followed exclusively until it ends. A
/// retreat already under way is kept when it still ends inside the region.
pub fn on_communication(
    g: &EnvironmentGraph,
    motion: &mut MotionState,
    old_region: &VertexSet,
    payload: &AgentPayload,
    t: f64,
) -> Result<(), MotionError> {
    let here = motion.settled_vertex();
    if let Activity::Waiting { until } = &mut motion.activity {
        *until = until.min(t);
    }
    if payload.region.contains(here) {
        motion.mode = MotionMode::Normal;
        motion.retreat_path.clear();
        return Ok(());
    }
    let keeps_going = motion.mode == MotionMode::Retreat
        && motion.retreat_path.first() == Some(&here)
        && motion
            .retreat_path
            .last()
            .is_some_and(|&v| payload.region.contains(v));
    if keeps_going {
        return Ok(());
    }
    if !old_region.contains(here) {
        return Err(MotionError::NoRetreatPath {
            agent: motion.agent,
            vertex: here,
        });
    }
    let path = g
        .shortest_path_in_subset(old_region, here, &payload.region)
        .map_err(|_| MotionError::NoRetreatPath {
            agent: motion.agent,
            vertex: here,
        })?;
    motion.mode = MotionMode::Retreat;
    motion.retreat_path = path;
    Ok(())
}

/// Moves the agent from `now` to `horizon`, with no exchange in between.
///
/// Decisions are taken on arrival at a vertex and when a wait ends; a
/// `Stay` waits for the agent's gate to open (or for the next exchange).
/// With `enforce_contract` every planner answer is checked for adjacency
/// and admissibility.
#[allow(clippy::too_many_arguments)]
pub fn advance_motion(
    g: &EnvironmentGraph,
    motion: &mut MotionState,
    view: &AgentTimingView,
    phi: &LikelihoodSchedule,
    mode: LikelihoodMode,
    planner: &mut dyn Planner,
    now: f64,
    horizon: f64,
    enforce_contract: bool,
) -> Result<MotionLog, MotionError> {
    if !(horizon > now) {
        return Err(MotionError::BadHorizon { now, horizon });
    }
    let agent = motion.agent;
    let mut records = Vec::new();
    let mut emit = |vertex: VertexId, enter: f64, exit: f64, share: f64| {
        if exit > enter {
            records.push(OccupancyRecord {
                agent,
                vertex,
                enter,
                exit,
                share,
            });
        }
    };
    let mut arrivals = Vec::new();
    let mut t = now;
    loop {
        match motion.activity {
            Activity::Transit(tr) => {
                let end = tr.arrive.min(horizon);
                emit(tr.from, t, end, 0.5);
                emit(tr.to, t, end, 0.5);
                if tr.arrive > horizon {
                    break;
                }
                t = tr.arrive;
                motion.current_vertex = tr.to;
                motion.visit_counts[tr.to] += 1;
                arrivals.push((t, tr.to));
                motion.activity = Activity::Waiting { until: t };
            }
            Activity::Waiting { until } => {
                if until > t {
                    let end = until.min(horizon);
                    emit(motion.current_vertex, t, end, 1.0);
                    if until >= horizon {
                        break;
                    }
                    t = until;
                }
                if t >= horizon {
                    break;
                }
                let step = decide(g, motion, view, phi, mode, planner, t, enforce_contract)?;
                motion.activity = match step {
                    Move::To(next) => {
                        let w = g
                            .edge_weight(motion.current_vertex, next)
                            .expect("decided move follows an edge");
                        Activity::Transit(Transit {
                            from: motion.current_vertex,
                            to: next,
                            depart: t,
                            arrive: t + w / motion.speed,
                        })
                    }
                    Move::Stay => {
                        let gate = view.gate_time();
                        Activity::Waiting {
                            until: if gate > t { gate } else { f64::INFINITY },
                        }
                    }
                };
            }
        }
    }
    Ok(MotionLog { records, arrivals })
}

#[allow(clippy::too_many_arguments)]
fn decide(
    g: &EnvironmentGraph,
    motion: &mut MotionState,
    view: &AgentTimingView,
    phi: &LikelihoodSchedule,
    mode: LikelihoodMode,
    planner: &mut dyn Planner,
    t: f64,
    enforce_contract: bool,
) -> Result<Move, MotionError> {
    if motion.mode == MotionMode::Retreat {
        if view.region.contains(motion.current_vertex) {
            motion.mode = MotionMode::Normal;
            motion.retreat_path.clear();
        } else {
            debug_assert_eq!(motion.retreat_path.first(), Some(&motion.current_vertex));
            motion.retreat_path.remove(0);
            let next = *motion
                .retreat_path
                .first()
                .ok_or(MotionError::NoRetreatPath {
                    agent: motion.agent,
                    vertex: motion.current_vertex,
                })?;
            return Ok(Move::To(next));
        }
    }
    let ctx = PlannerContext {
        graph: g,
        view,
        motion,
        phi,
        mode,
        time: t,
    };
    let step = planner.next_move(&ctx);
    if enforce_contract {
        if let Move::To(next) = step {
            let reason = if g.edge_weight(motion.current_vertex, next).is_none() {
                Some(format!(
                    "vertex {next} is not adjacent to {}",
                    motion.current_vertex
                ))
            } else if !view.region.contains(next) {
                Some(format!("vertex {next} is outside the region"))
            } else if view.is_prohibited(next, t) {
                Some(format!("vertex {next} is prohibited"))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(MotionError::PlannerContract {
                    planner: planner.name().to_string(),
                    agent: motion.agent,
                    time: t,
                    reason,
                });
            }
        }
    }
    if let Move::To(next) = step {
        if g.edge_weight(motion.current_vertex, next).is_none() {
            // even an unchecked planner cannot teleport
            return Ok(Move::Stay);
        }
    }
    Ok(step)
}
