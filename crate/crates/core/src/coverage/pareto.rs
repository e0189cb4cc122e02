use serde::Serialize;

use super::additive::Competition;
use super::cost::{candidate_cost, covering_cost, region_candidate};
use super::{AgentId, BaseStationState, CoverageError, MissionParams};
use crate::graph::{EnvironmentGraph, VertexId};
use crate::likelihood::LikelihoodSchedule;
use crate::vertex_set::VertexSet;

pub const EXHAUSTIVE_MAX_VERTICES: usize = 10;
pub const EXHAUSTIVE_MAX_AGENTS: usize = 3;

/// Above this many (region-tuple) bits the covering scan switches from
/// literal enumeration to the dominating all-of-`Q` covering.
const LITERAL_COVERING_BITS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoMode {
    /// Generator scan plus boundary conditions on the current partition.
    Local,
    /// Literal comparison against every generator tuple and every covering.
    Exhaustive,
}

/// Counterexample showing the pair can be improved.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParetoWitness {
    /// Moving agent `agent`'s generator to `vertex` lowers the cost.
    Generator {
        agent: AgentId,
        vertex: VertexId,
        cost: f64,
        current: f64,
    },
    /// Agent `agent` reaches boundary vertex `vertex` of `owner` faster.
    Boundary {
        agent: AgentId,
        owner: AgentId,
        vertex: VertexId,
        via_agent: f64,
        via_owner: f64,
    },
    /// A generator tuple with lower cost on the same covering.
    GeneratorTuple {
        generators: Vec<VertexId>,
        cost: f64,
        current: f64,
    },
    /// A covering with lower cost for the same generators.
    Covering {
        covering: Vec<Vec<VertexId>>,
        cost: f64,
        current: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoCertificate {
    pub mode: ParetoMode,
    pub cost: f64,
    pub witness: Option<ParetoWitness>,
}

impl ParetoCertificate {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Checks whether `(c, P)` cannot be improved by moving generators or by
/// changing the covering. `P` must be a partition.
///
/// Local mode compares strictly with the same arithmetic the update uses,
/// so a configuration the update leaves alone is certified exactly. Local
/// boundary conditions are only enforced at vertices with positive mass,
/// since massless vertices never influence the cost.
pub fn pareto_certificate(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    phi: &LikelihoodSchedule,
    t: f64,
    mode: ParetoMode,
) -> Result<ParetoCertificate, CoverageError> {
    if !state.is_partition() {
        return Err(CoverageError::NotPartition);
    }
    let masses = phi.masses_at(t.max(0.0));
    let cost = covering_cost(
        g,
        &params.speeds,
        &state.covering,
        &state.generators,
        masses,
    );
    let witness = match mode {
        ParetoMode::Local => local(state, g, params, masses, cost),
        ParetoMode::Exhaustive => {
            let m = state.agent_count();
            let n = g.vertex_count();
            if n > EXHAUSTIVE_MAX_VERTICES || m > EXHAUSTIVE_MAX_AGENTS {
                return Err(CoverageError::SizeLimit {
                    max_vertices: EXHAUSTIVE_MAX_VERTICES,
                    max_agents: EXHAUSTIVE_MAX_AGENTS,
                });
            }
            exhaustive(state, g, params, masses, cost)
        }
    };
    Ok(ParetoCertificate {
        mode,
        cost,
        witness,
    })
}

fn local(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    masses: &[f64],
    current: f64,
) -> Option<ParetoWitness> {
    let m = state.agent_count();
    for i in 0..m {
        let comp = Competition::new(state, g, params, i, f64::INFINITY);
        let region = &state.covering[i];
        for k in region.iter() {
            let cand = region_candidate(g, region, k);
            let cost = candidate_cost(&comp, &cand, params.speeds[i], masses);
            if cost < current {
                return Some(ParetoWitness::Generator {
                    agent: i,
                    vertex: k,
                    cost,
                    current,
                });
            }
        }
    }
    let dist: Vec<Vec<f64>> = (0..m)
        .map(|i| g.raw_distances_within(&state.covering[i], &[state.generators[i]]))
        .collect();
    for k in 0..g.vertex_count() {
        if masses[k] == 0.0 {
            continue;
        }
        let owner = state.identifier[k];
        let via_owner = dist[owner][k] / params.speeds[owner];
        for i in (0..m).filter(|&i| i != owner) {
            let reach = g
                .neighbors(k)
                .iter()
                .filter(|(nb, _)| state.covering[i].contains(*nb))
                .map(|&(nb, w)| dist[i][nb] + w)
                .fold(f64::INFINITY, f64::min);
            let via_agent = reach / params.speeds[i];
            if via_agent < via_owner {
                return Some(ParetoWitness::Boundary {
                    agent: i,
                    owner,
                    vertex: k,
                    via_agent,
                    via_owner,
                });
            }
        }
    }
    None
}

fn exhaustive(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    masses: &[f64],
    current: f64,
) -> Option<ParetoWitness> {
    let m = state.agent_count();
    let n = g.vertex_count();
    let tol = 1e-9 * current.abs().max(1.0);
    let speeds = &params.speeds;

    // every generator tuple in Q^m
    let mut tuple = vec![0usize; m];
    loop {
        let cost = covering_cost(g, speeds, &state.covering, &tuple, masses);
        if cost < current - tol {
            return Some(ParetoWitness::GeneratorTuple {
                generators: tuple,
                cost,
                current,
            });
        }
        if !advance(&mut tuple, n) {
            break;
        }
    }

    // every m-covering: nonempty sets whose union is Q
    let full = (1u64 << n) - 1;
    let report = |sets: &[VertexSet], cost: f64| ParetoWitness::Covering {
        covering: sets.iter().map(VertexSet::to_vec).collect(),
        cost,
        current,
    };
    if n * m <= LITERAL_COVERING_BITS {
        let mut masks = vec![1u64; m];
        loop {
            if masks.iter().fold(0, |acc, &x| acc | x) == full {
                let sets: Vec<VertexSet> = masks.iter().map(|&mask| mask_set(n, mask)).collect();
                let cost = covering_cost(g, speeds, &sets, &state.generators, masses);
                if cost < current - tol {
                    return Some(report(&sets, cost));
                }
            }
            if !advance_masks(&mut masks, full) {
                break;
            }
        }
    } else {
        // Enlarging any region never raises the cost, so every region equal
        // to Q is the cheapest covering.
        let sets = vec![g.all_vertices(); m];
        let cost = covering_cost(g, speeds, &sets, &state.generators, masses);
        if cost < current - tol {
            return Some(report(&sets, cost));
        }
    }
    None
}

fn mask_set(n: usize, mask: u64) -> VertexSet {
    VertexSet::from_vertices(n, (0..n).filter(|&v| mask >> v & 1 == 1))
}

fn advance(tuple: &mut [usize], base: usize) -> bool {
    for digit in tuple.iter_mut() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

fn advance_masks(masks: &mut [u64], full: u64) -> bool {
    for mask in masks.iter_mut() {
        if *mask < full {
            *mask += 1;
            return true;
        }
        *mask = 1;
    }
    false
}
