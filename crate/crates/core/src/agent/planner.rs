use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MotionState;
use crate::graph::{EnvironmentGraph, VertexId};
use crate::likelihood::{AgentTimingView, LikelihoodMode, LikelihoodSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Stay,
    To(VertexId),
}

/// Everything a planner may look at when asked for the next step.
pub struct PlannerContext<'a> {
    pub graph: &'a EnvironmentGraph,
    pub view: &'a AgentTimingView,
    pub motion: &'a MotionState,
    pub phi: &'a LikelihoodSchedule,
    pub mode: LikelihoodMode,
    pub time: f64,
}

impl PlannerContext<'_> {
    /// Neighbours of the current vertex the agent may enter right now, in
    /// ascending id order.
    pub fn admissible_neighbors(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.graph
            .neighbors(self.motion.current_vertex)
            .iter()
            .map(|&(n, _)| n)
            .filter(|&n| self.view.is_active(n, self.time))
    }
}

/// Incremental trajectory generator. A conforming planner only ever returns
/// `Stay` or an adjacent vertex of the active region at decision time; the
/// motion layer checks this on every call.
pub trait Planner: Send {
    fn name(&self) -> &str;
    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move;
}

/// Walks to the admissible neighbour with the highest local likelihood per
/// visit, so that long-run occupancy follows the likelihood.
#[derive(Debug, Default, Clone)]
pub struct GreedyErgodic;

impl Planner for GreedyErgodic {
    fn name(&self) -> &str {
        PlannerKind::GreedyErgodic.as_str()
    }

    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move {
        let mut best: Option<(f64, VertexId)> = None;
        for n in ctx.admissible_neighbors() {
            let score = ctx.view.local_mass(ctx.phi, n, ctx.time, ctx.mode)
                / (1.0 + ctx.motion.visit_counts[n] as f64);
            // strict comparison keeps the lowest id among equal scores
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, n));
            }
        }
        best.map_or(Move::Stay, |(_, n)| Move::To(n))
    }
}

/// Uniformly random admissible neighbour.
#[derive(Debug, Clone)]
pub struct RandomAdmissible {
    rng: ChaCha8Rng,
}

impl RandomAdmissible {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Planner for RandomAdmissible {
    fn name(&self) -> &str {
        PlannerKind::RandomAdmissible.as_str()
    }

    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move {
        let options: Vec<VertexId> = ctx.admissible_neighbors().collect();
        options
            .choose(&mut self.rng)
            .map_or(Move::Stay, |&n| Move::To(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PlannerKind {
    #[default]
    #[serde(rename = "greedy-ergodic")]
    GreedyErgodic,
    #[serde(rename = "random-admissible")]
    RandomAdmissible,
}

impl PlannerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::GreedyErgodic => "greedy-ergodic",
            PlannerKind::RandomAdmissible => "random-admissible",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy-ergodic" => Ok(PlannerKind::GreedyErgodic),
            "random-admissible" => Ok(PlannerKind::RandomAdmissible),
            other => Err(format!("unknown planner `{other}`")),
        }
    }
}

/// Planner instance for one agent; `seed` only matters for randomized planners.
pub fn build_planner(kind: PlannerKind, seed: u64) -> Box<dyn Planner> {
    match kind {
        PlannerKind::GreedyErgodic => Box::new(GreedyErgodic),
        PlannerKind::RandomAdmissible => Box::new(RandomAdmissible::new(seed)),
    }
}
