use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::agent::PlannerKind;
use crate::coverage::{init_state, CoverageError, MissionParams};
use crate::graph::{EnvironmentGraph, GraphDocument, VertexId, WeightMode};
use crate::likelihood::{LikelihoodMode, LikelihoodSchedule, LikelihoodSpec};

/// How many random generator draws to try before giving up.
const GENERATOR_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "unit_cell")]
    pub cell_size: f64,
    #[serde(default)]
    pub weight_mode: WeightMode,
}

fn unit_cell() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSpec {
    Grid(GridSpec),
    Explicit(GraphDocument),
}

impl GraphSpec {
    pub fn build(&self) -> Result<EnvironmentGraph, SimError> {
        Ok(match self {
            GraphSpec::Grid(g) => {
                EnvironmentGraph::build_grid(g.rows, g.cols, g.cell_size, g.weight_mode)?
            }
            GraphSpec::Explicit(doc) => EnvironmentGraph::from_document(doc)?,
        })
    }
}

/// A complete run description, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub graph: GraphSpec,
    pub mission: MissionParams,
    /// Initial generators; drawn at random from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<VertexId>>,
    pub likelihood: LikelihoodSpec,
    #[serde(default)]
    pub planner: PlannerKind,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub likelihood_mode: LikelihoodMode,
    /// Times at which occupancy is compared against the likelihood.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    /// Times at which a state snapshot is recorded.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

/// A validated configuration with every derived object built.
#[derive(Debug, Clone)]
pub struct PreparedConfig {
    pub config: SimConfig,
    pub graph: EnvironmentGraph,
    pub phi: LikelihoodSchedule,
    pub generators: Vec<VertexId>,
    /// `max_i (1/s_i) Σ_edges d_Q`.
    pub diameter_bound: f64,
    /// Per-agent slack kept before each exchange deadline, one longest
    /// edge traversal, so that an exchange arriving mid-edge still leaves
    /// the agent's successor the full vacate time.
    pub deadline_reserve: Vec<f64>,
}

impl PreparedConfig {
    pub fn params(&self) -> &MissionParams {
        &self.config.mission
    }

    /// `Δ̄ + d̄`, the bound on any uncovered interval.
    pub fn uncovered_bound(&self) -> f64 {
        self.config.mission.delta_bar + self.diameter_bound
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text)
            .map_err(|e| SimError::Config(format!("malformed configuration: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Full validation: schema-level values, mission parameters, schedule
    /// feasibility, likelihood normalization and the initial partition.
    pub fn prepare(&self) -> Result<PreparedConfig, SimError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimError::Config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if let Some(t) = self
            .checkpoints
            .iter()
            .chain(&self.snapshot_times)
            .find(|t| !(t.is_finite() && **t >= 0.0))
        {
            return Err(SimError::Config(format!(
                "checkpoint and snapshot times must be nonnegative, got {t}"
            )));
        }
        let graph = self.graph.build()?;
        let params = &self.mission;
        params.validate()?;
        if !graph.is_connected(&graph.all_vertices())? {
            return Err(SimError::Config(
                "environment graph must be connected".into(),
            ));
        }
        let m = params.agent_count();
        let deadline_reserve: Vec<f64> = params
            .speeds
            .iter()
            .map(|s| graph.max_edge_weight() / s)
            .collect();
        let worst_reserve = deadline_reserve.iter().copied().fold(0.0, f64::max);
        if params.delta_bar - worst_reserve < m as f64 * params.delta_lower {
            return Err(SimError::Config(format!(
                "schedule infeasible: delta_bar - longest edge time = {} < m * delta_lower = {}",
                params.delta_bar - worst_reserve,
                m as f64 * params.delta_lower
            )));
        }
        let phi = LikelihoodSchedule::from_spec(&self.likelihood, &graph)?;
        let generators = match &self.generators {
            Some(gens) => {
                init_state(&graph, params, gens)?;
                gens.clone()
            }
            None => random_generators(&graph, params, self.seed)?,
        };
        let diameter_bound = graph.diameter_bound(&params.speeds)?;
        Ok(PreparedConfig {
            config: self.clone(),
            graph,
            phi,
            generators,
            diameter_bound,
            deadline_reserve,
        })
    }
}

/// Distinct random generators whose weighted Voronoi cells are all
/// nonempty and connected.
fn random_generators(
    g: &EnvironmentGraph,
    params: &MissionParams,
    seed: u64,
) -> Result<Vec<VertexId>, SimError> {
    let m = params.agent_count();
    let n = g.vertex_count();
    if m > n {
        return Err(SimError::Config(format!(
            "{m} agents need at least {m} vertices"
        )));
    }
    // separate stream from the communication schedule
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6765_6e65_7261_746f);
    for _ in 0..GENERATOR_ATTEMPTS {
        let gens: Vec<VertexId> = sample(&mut rng, n, m).into_vec();
        match init_state(g, params, &gens) {
            Ok(_) => return Ok(gens),
            Err(CoverageError::EmptyCell(_) | CoverageError::DisconnectedCell(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(SimError::Config(
        "could not draw generators with connected initial cells".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::GaussianSpec;

    pub(crate) fn baseline() -> SimConfig {
        SimConfig {
            graph: GraphSpec::Grid(GridSpec {
                rows: 20,
                cols: 20,
                cell_size: 5.0,
                weight_mode: WeightMode::Unit,
            }),
            mission: MissionParams {
                speeds: vec![1.0; 4],
                delta_bar: 10.0,
                delta_lower: 1.0,
                delta_h: 2.0,
            },
            generators: None,
            likelihood: LikelihoodSpec::Gaussian(GaussianSpec {
                center: [0.0, 0.0],
                sigma: 30.0,
            }),
            planner: PlannerKind::GreedyErgodic,
            duration: 10000.0,
            seed: 1,
            likelihood_mode: LikelihoodMode::Instantaneous,
            checkpoints: vec![1000.0, 10000.0],
            snapshot_times: vec![],
        }
    }

    #[test]
    fn baseline_prepares() {
        let p = baseline().prepare().unwrap();
        assert_eq!(p.diameter_bound, 760.0);
        assert_eq!(p.uncovered_bound(), 770.0);
        assert_eq!(p.generators.len(), 4);
        assert_eq!(p.deadline_reserve, vec![1.0; 4]);
    }

    #[test]
    fn json_round_trip() {
        let cfg = baseline();
        assert_eq!(SimConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn coincident_generators_are_rejected() {
        let mut cfg = baseline();
        cfg.generators = Some(vec![0, 0, 5, 9]);
        assert!(matches!(
            cfg.prepare(),
            Err(SimError::Coverage(CoverageError::DuplicateGenerator(0)))
        ));
    }

    #[test]
    fn infeasible_schedule_is_rejected() {
        let mut cfg = baseline();
        cfg.mission.delta_bar = 3.0;
        assert!(cfg.prepare().is_err());
        // feasible for the bare protocol but not once the edge reserve is kept
        cfg.mission.delta_bar = 4.5;
        assert!(matches!(cfg.prepare(), Err(SimError::Config(_))));
    }

    #[test]
    fn random_generators_are_deterministic() {
        let a = baseline().prepare().unwrap().generators;
        let b = baseline().prepare().unwrap().generators;
        assert_eq!(a, b);
    }
}
