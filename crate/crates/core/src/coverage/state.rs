use serde::{Deserialize, Serialize};

use super::{AgentId, CoverageError, MissionParams};
use crate::graph::{EnvironmentGraph, VertexId};
use crate::likelihood::AgentTimingView;
use crate::vertex_set::VertexSet;

/// What the base station hands back to the agent it just talked to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPayload {
    pub region: VertexSet,
    pub generator: VertexId,
    pub recently_added: VertexSet,
    pub tau: f64,
    pub omega: f64,
}

impl AgentPayload {
    pub fn timing_view(&self) -> AgentTimingView {
        AgentTimingView {
            region: self.region.clone(),
            recently_added: self.recently_added.clone(),
            tau: self.tau,
            omega: self.omega,
        }
    }
}

/// Global state kept by the base station.
///
/// `agents[i]` mirrors the last payload sent to agent `i`; the base station
/// is the only writer of those variables, so the mirror is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStationState {
    pub covering: Vec<VertexSet>,
    pub generators: Vec<VertexId>,
    pub identifier: Vec<AgentId>,
    /// Absolute time at which each timer reaches zero.
    pub timer_expiry: Vec<f64>,
    pub last_contact: Vec<f64>,
    pub agents: Vec<AgentPayload>,
}

impl BaseStationState {
    pub fn agent_count(&self) -> usize {
        self.covering.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.identifier.len()
    }

    /// `T_i(t) = max(0, expiry_i − t)`.
    pub fn timer(&self, i: AgentId, t: f64) -> f64 {
        (self.timer_expiry[i] - t).max(0.0)
    }

    /// `P_i^ID`: vertices labelled with agent `i`.
    pub fn id_region(&self, i: AgentId) -> VertexSet {
        VertexSet::from_vertices(
            self.vertex_count(),
            self.identifier
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a == i)
                .map(|(k, _)| k),
        )
    }

    pub fn id_partition(&self) -> Vec<VertexSet> {
        let mut parts = vec![VertexSet::empty(self.vertex_count()); self.agent_count()];
        for (k, &a) in self.identifier.iter().enumerate() {
            parts[a].insert(k);
        }
        parts
    }

    pub fn is_partition(&self) -> bool {
        let mut seen = VertexSet::empty(self.vertex_count());
        for region in &self.covering {
            if !seen.is_disjoint(region) {
                return false;
            }
            seen.union_with(region);
        }
        seen.len() == self.vertex_count()
    }

    /// `P = P^ID`.
    pub fn covering_matches_ids(&self) -> bool {
        self.covering
            .iter()
            .enumerate()
            .all(|(i, region)| *region == self.id_region(i))
    }

    pub fn timing_view(&self, i: AgentId) -> AgentTimingView {
        self.agents[i].timing_view()
    }

    pub fn snapshot(&self, time: f64) -> StateSnapshot {
        StateSnapshot {
            schema: SNAPSHOT_SCHEMA.to_string(),
            version: SNAPSHOT_VERSION,
            time,
            covering: self.covering.iter().map(VertexSet::to_vec).collect(),
            generators: self.generators.clone(),
            identifier: self.identifier.clone(),
            timer_expiry: self.timer_expiry.clone(),
            last_contact: self.last_contact.clone(),
        }
    }
}

pub const SNAPSHOT_SCHEMA: &str = "coverops/state-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Versioned JSON snapshot of the base-station state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub schema: String,
    pub version: u32,
    pub time: f64,
    pub covering: Vec<Vec<VertexId>>,
    pub generators: Vec<VertexId>,
    pub identifier: Vec<AgentId>,
    pub timer_expiry: Vec<f64>,
    pub last_contact: Vec<f64>,
}

/// Initial state: speed-weighted graph Voronoi cells around `generators`
/// (ties go to the lowest agent index), zero timers, open gates.
pub fn init_state(
    g: &EnvironmentGraph,
    params: &MissionParams,
    generators: &[VertexId],
) -> Result<(BaseStationState, Vec<AgentPayload>), CoverageError> {
    params.validate()?;
    let m = params.agent_count();
    let n = g.vertex_count();
    if generators.len() != m {
        return Err(CoverageError::GeneratorCount {
            expected: m,
            got: generators.len(),
        });
    }
    for (i, &c) in generators.iter().enumerate() {
        if c >= n {
            return Err(CoverageError::UnknownVertex(c));
        }
        if generators[..i].contains(&c) {
            return Err(CoverageError::DuplicateGenerator(c));
        }
    }
    let all = g.all_vertices();
    let scaled: Vec<Vec<f64>> = generators
        .iter()
        .zip(&params.speeds)
        .map(|(&c, &s)| {
            g.raw_distances_within(&all, &[c])
                .into_iter()
                .map(|d| d / s)
                .collect()
        })
        .collect();
    let mut identifier = vec![0; n];
    for (k, owner) in identifier.iter_mut().enumerate() {
        let mut best = 0;
        for i in 1..m {
            if scaled[i][k] < scaled[best][k] {
                best = i;
            }
        }
        *owner = best;
    }
    let mut covering = vec![VertexSet::empty(n); m];
    for (k, &a) in identifier.iter().enumerate() {
        covering[a].insert(k);
    }
    for (i, region) in covering.iter().enumerate() {
        if region.is_empty() {
            return Err(CoverageError::EmptyCell(i));
        }
        if !g.is_connected(region)? {
            return Err(CoverageError::DisconnectedCell(i));
        }
    }
    let payloads: Vec<AgentPayload> = (0..m)
        .map(|i| AgentPayload {
            region: covering[i].clone(),
            generator: generators[i],
            recently_added: VertexSet::empty(n),
            tau: -params.delta_h,
            omega: 0.0,
        })
        .collect();
    let state = BaseStationState {
        covering,
        generators: generators.to_vec(),
        identifier,
        timer_expiry: vec![0.0; m],
        last_contact: vec![0.0; m],
        agents: payloads.clone(),
    };
    Ok((state, payloads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(speeds: &[f64]) -> MissionParams {
        MissionParams {
            speeds: speeds.to_vec(),
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 2.0,
        }
    }

    fn path3() -> EnvironmentGraph {
        EnvironmentGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap()
    }

    #[test]
    fn single_agent_owns_everything() {
        let g = path3();
        let (state, payloads) = init_state(&g, &params(&[1.0]), &[1]).unwrap();
        assert_eq!(state.covering[0], g.all_vertices());
        assert_eq!(state.identifier, vec![0, 0, 0]);
        assert_eq!(payloads[0].tau, -2.0);
        assert!(payloads[0].recently_added.is_empty());
    }

    #[test]
    fn voronoi_tie_goes_to_lower_index() {
        let g = path3();
        let (state, _) = init_state(&g, &params(&[1.0, 1.0]), &[0, 2]).unwrap();
        assert_eq!(state.covering[0].to_vec(), vec![0, 1]);
        assert_eq!(state.covering[1].to_vec(), vec![2]);
    }

    #[test]
    fn voronoi_is_speed_weighted() {
        let g = path3();
        let (state, _) = init_state(&g, &params(&[1.0, 2.0]), &[0, 2]).unwrap();
        // vertex 1: 1/1 for agent 0 vs 1/2 for agent 1
        assert_eq!(state.covering[1].to_vec(), vec![1, 2]);
        let (state, _) = init_state(&g, &params(&[2.0, 1.0]), &[0, 2]).unwrap();
        assert_eq!(state.covering[0].to_vec(), vec![0, 1]);
    }

    #[test]
    fn initial_timers_and_ids() {
        let g = EnvironmentGraph::build_grid(3, 3, 1.0, crate::graph::WeightMode::Unit).unwrap();
        let (state, _) = init_state(&g, &params(&[1.0, 1.0]), &[0, 8]).unwrap();
        assert!(state.covering_matches_ids());
        assert!(state.is_partition());
        assert_eq!(state.timer(0, 0.0), 0.0);
        assert_eq!(state.identifier[0], 0);
        assert_eq!(state.identifier[8], 1);
    }

    #[test]
    fn rejects_bad_generators() {
        let g = path3();
        assert_eq!(
            init_state(&g, &params(&[1.0, 1.0]), &[1, 1]).unwrap_err(),
            CoverageError::DuplicateGenerator(1)
        );
        assert!(matches!(
            init_state(&g, &params(&[1.0, 1.0]), &[1]).unwrap_err(),
            CoverageError::GeneratorCount { .. }
        ));
    }

    #[test]
    fn weighted_cell_can_be_disconnected() {
        // a fast agent at the end of a path reaches both sides of a slow one
        let g = EnvironmentGraph::new(
            5,
            [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)],
            None,
        )
        .unwrap();
        let p = MissionParams {
            speeds: vec![1.0, 10.0],
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 1.0,
        };
        let err = init_state(&g, &p, &[2, 4]).unwrap_err();
        assert!(
            matches!(
                err,
                CoverageError::DisconnectedCell(_) | CoverageError::EmptyCell(_)
            ),
            "{err:?}"
        );
    }
}
