//! Event-likelihood fields.
//!
//! The base station holds a piecewise-constant-in-time probability mass
//! function over vertices. Each agent derives a local likelihood from it by
//! masking its coverage region and holding back recently added vertices
//! until its timing gate opens.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EnvironmentGraph, GridGeometry, VertexId};
use crate::vertex_set::VertexSet;

/// Tolerance on `Σ masses = 1` for each segment.
pub const MASS_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error("likelihood schedule has no segments")]
    NoSegments,
    #[error("first segment must start at t = 0, got {0}")]
    FirstSegmentNotAtZero(f64),
    #[error("segment start times must be strictly increasing ({prev} then {next})")]
    NonIncreasingStart { prev: f64, next: f64 },
    #[error("segment {segment} has {got} masses, expected {expected}")]
    WrongLength {
        segment: usize,
        got: usize,
        expected: usize,
    },
    #[error("segment {segment} has a negative or non-finite mass at vertex {vertex}")]
    BadMass { segment: usize, vertex: VertexId },
    #[error("segment {segment} masses sum to {sum}, expected 1")]
    NotNormalized { segment: usize, sum: f64 },
    #[error("time {0} is negative")]
    NegativeTime(f64),
    #[error("gaussian likelihood needs grid geometry")]
    NoGeometry,
    #[error("gaussian sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("schedule segment at t = {0} must give exactly one of `masses` or `gaussian`")]
    AmbiguousSegment(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub masses: Vec<f64>,
}

/// Piecewise-constant `Φ(k, t)`, right-continuous at switch times.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodSchedule {
    vertex_count: usize,
    segments: Vec<Segment>,
}

impl LikelihoodSchedule {
    pub fn new(vertex_count: usize, segments: Vec<Segment>) -> Result<Self, LikelihoodError> {
        let first = segments.first().ok_or(LikelihoodError::NoSegments)?;
        if first.start != 0.0 {
            return Err(LikelihoodError::FirstSegmentNotAtZero(first.start));
        }
        for pair in segments.windows(2) {
            if !(pair[1].start > pair[0].start) {
                return Err(LikelihoodError::NonIncreasingStart {
                    prev: pair[0].start,
                    next: pair[1].start,
                });
            }
        }
        for (i, seg) in segments.iter().enumerate() {
            if seg.masses.len() != vertex_count {
                return Err(LikelihoodError::WrongLength {
                    segment: i,
                    got: seg.masses.len(),
                    expected: vertex_count,
                });
            }
            if let Some(v) = seg
                .masses
                .iter()
                .position(|m| !(m.is_finite() && *m >= 0.0))
            {
                return Err(LikelihoodError::BadMass {
                    segment: i,
                    vertex: v,
                });
            }
            let sum: f64 = seg.masses.iter().sum();
            if (sum - 1.0).abs() > MASS_SUM_TOLERANCE {
                return Err(LikelihoodError::NotNormalized { segment: i, sum });
            }
        }
        Ok(Self {
            vertex_count,
            segments,
        })
    }

    pub fn constant(masses: Vec<f64>) -> Result<Self, LikelihoodError> {
        Self::new(masses.len(), vec![Segment { start: 0.0, masses }])
    }

    pub fn uniform(vertex_count: usize) -> Self {
        let masses = vec![1.0 / vertex_count as f64; vertex_count];
        Self {
            vertex_count,
            segments: vec![Segment { start: 0.0, masses }],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_static(&self) -> bool {
        self.segments.len() == 1
    }

    /// Switch instants after t = 0.
    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    /// Index of the segment active at `t` (the new segment at a switch instant).
    pub fn segment_index_at(&self, t: f64) -> usize {
        self.segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1)
    }

    pub fn masses_at(&self, t: f64) -> &[f64] {
        &self.segments[self.segment_index_at(t)].masses
    }

    pub fn global_mass(&self, k: VertexId, t: f64) -> Result<f64, LikelihoodError> {
        if t < 0.0 {
            return Err(LikelihoodError::NegativeTime(t));
        }
        Ok(self.masses_at(t)[k])
    }

    /// Gaussian bump sampled at cell centres and normalized.
    pub fn gaussian_masses(
        grid: &GridGeometry,
        center: [f64; 2],
        sigma: f64,
    ) -> Result<Vec<f64>, LikelihoodError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(LikelihoodError::BadSigma(sigma));
        }
        let n = grid.rows * grid.cols;
        let raw: Vec<f64> = (0..n)
            .map(|v| {
                let (x, y) = grid.cell_center(v);
                let d2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                (-d2 / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|m| m / total).collect())
    }

    /// `count` switches at uniformly random instants in `(0, horizon)`, each
    /// to a Gaussian centred at a uniformly random point of the grid.
    pub fn random_gaussian_switches<R: Rng>(
        grid: &GridGeometry,
        count: usize,
        horizon: f64,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self, LikelihoodError> {
        let width = grid.cols as f64 * grid.cell_size;
        let height = grid.rows as f64 * grid.cell_size;
        let random_center = |rng: &mut R| [rng.gen_range(0.0..width), rng.gen_range(0.0..height)];
        let mut times: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..horizon)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.retain(|&t| t > 0.0);
        let mut segments = vec![Segment {
            start: 0.0,
            masses: Self::gaussian_masses(grid, random_center(rng), sigma)?,
        }];
        for t in times {
            segments.push(Segment {
                start: t,
                masses: Self::gaussian_masses(grid, random_center(rng), sigma)?,
            });
        }
        Self::new(grid.rows * grid.cols, segments)
    }

    pub fn from_spec(
        spec: &LikelihoodSpec,
        graph: &EnvironmentGraph,
    ) -> Result<Self, LikelihoodError> {
        let n = graph.vertex_count();
        match spec {
            LikelihoodSpec::Uniform => Ok(Self::uniform(n)),
            LikelihoodSpec::Gaussian(g) => {
                let grid = graph.grid().ok_or(LikelihoodError::NoGeometry)?;
                Self::constant(Self::gaussian_masses(grid, g.center, g.sigma)?)
            }
            LikelihoodSpec::Schedule { segments } => {
                let mut out = Vec::with_capacity(segments.len());
                for seg in segments {
                    let masses = match (&seg.masses, &seg.gaussian) {
                        (Some(m), None) => m.clone(),
                        (None, Some(g)) => {
                            let grid = graph.grid().ok_or(LikelihoodError::NoGeometry)?;
                            Self::gaussian_masses(grid, g.center, g.sigma)?
                        }
                        _ => return Err(LikelihoodError::AmbiguousSegment(seg.t)),
                    };
                    out.push(Segment {
                        start: seg.t,
                        masses,
                    });
                }
                Self::new(n, out)
            }
        }
    }

    pub fn to_spec(&self) -> LikelihoodSpec {
        LikelihoodSpec::Schedule {
            segments: self
                .segments
                .iter()
                .map(|s| SegmentSpec {
                    t: s.start,
                    masses: Some(s.masses.clone()),
                    gaussian: None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub center: [f64; 2],
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianSpec>,
}

/// Likelihood section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LikelihoodSpec {
    Uniform,
    Gaussian(GaussianSpec),
    Schedule { segments: Vec<SegmentSpec> },
}

/// Whether an agent reads `Φ(k, t)` or the value frozen at its last exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    #[default]
    Instantaneous,
    Frozen,
}

/// The agent-side variables that shape its local likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTimingView {
    pub region: VertexSet,
    pub recently_added: VertexSet,
    /// Local timing parameter; negative values mean the gate is already open.
    pub tau: f64,
    /// Time of the agent's last exchange.
    pub omega: f64,
}

impl AgentTimingView {
    /// Instant from which recently added vertices stop being prohibited.
    pub fn gate_time(&self) -> f64 {
        self.omega + self.tau
    }

    /// `t − ω ≥ τ`, evaluated as `t ≥ ω + τ` so that it flips exactly at [`gate_time`](Self::gate_time).
    pub fn gate_open(&self, t: f64) -> bool {
        t >= self.gate_time()
    }

    pub fn local_mass(
        &self,
        phi: &LikelihoodSchedule,
        k: VertexId,
        t: f64,
        mode: LikelihoodMode,
    ) -> f64 {
        if !self.region.contains(k) {
            return 0.0;
        }
        if !self.gate_open(t) && self.recently_added.contains(k) {
            return 0.0;
        }
        let at = match mode {
            LikelihoodMode::Instantaneous => t,
            LikelihoodMode::Frozen => self.omega,
        };
        phi.masses_at(at.max(0.0))[k]
    }

    pub fn prohibited_region(&self, t: f64) -> VertexSet {
        if self.gate_open(t) {
            VertexSet::empty(self.region.universe())
        } else {
            self.recently_added.intersection(&self.region)
        }
    }

    pub fn is_prohibited(&self, k: VertexId, t: f64) -> bool {
        !self.gate_open(t) && self.recently_added.contains(k) && self.region.contains(k)
    }

    pub fn active_region(&self, t: f64) -> VertexSet {
        self.region.difference(&self.prohibited_region(t))
    }

    pub fn is_active(&self, k: VertexId, t: f64) -> bool {
        self.region.contains(k) && !self.is_prohibited(k, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(region: &[usize], added: &[usize], tau: f64, omega: f64) -> AgentTimingView {
        AgentTimingView {
            region: VertexSet::from_vertices(6, region.iter().copied()),
            recently_added: VertexSet::from_vertices(6, added.iter().copied()),
            tau,
            omega,
        }
    }

    fn two_segment() -> LikelihoodSchedule {
        LikelihoodSchedule::new(
            2,
            vec![
                Segment {
                    start: 0.0,
                    masses: vec![0.75, 0.25],
                },
                Segment {
                    start: 2000.0,
                    masses: vec![0.1, 0.9],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn uniform_mass() {
        let phi = LikelihoodSchedule::uniform(4);
        assert_eq!(phi.global_mass(3, 0.0).unwrap(), 0.25);
        assert_eq!(phi.global_mass(0, 1e6).unwrap(), 0.25);
    }

    #[test]
    fn switch_is_right_continuous() {
        let phi = two_segment();
        assert_eq!(phi.global_mass(0, 1999.999).unwrap(), 0.75);
        assert_eq!(phi.global_mass(0, 2000.0).unwrap(), 0.1);
        assert_eq!(phi.global_mass(1, 2500.0).unwrap(), 0.9);
        assert_eq!(phi.switch_times().collect::<Vec<_>>(), vec![2000.0]);
    }

    #[test]
    fn negative_time_is_an_error() {
        assert_eq!(
            two_segment().global_mass(0, -1.0).unwrap_err(),
            LikelihoodError::NegativeTime(-1.0)
        );
    }

    #[test]
    fn schedule_validation() {
        assert!(matches!(
            LikelihoodSchedule::new(
                2,
                vec![Segment {
                    start: 0.0,
                    masses: vec![0.5, 0.6]
                }]
            ),
            Err(LikelihoodError::NotNormalized { .. })
        ));
        assert!(matches!(
            LikelihoodSchedule::new(
                2,
                vec![Segment {
                    start: 1.0,
                    masses: vec![0.5, 0.5]
                }]
            ),
            Err(LikelihoodError::FirstSegmentNotAtZero(_))
        ));
        assert!(matches!(
            LikelihoodSchedule::new(
                2,
                vec![
                    Segment {
                        start: 0.0,
                        masses: vec![0.5, 0.5]
                    },
                    Segment {
                        start: 0.0,
                        masses: vec![0.5, 0.5]
                    }
                ]
            ),
            Err(LikelihoodError::NonIncreasingStart { .. })
        ));
    }

    #[test]
    fn local_mass_branches() {
        let phi = LikelihoodSchedule::uniform(6);
        let v = view(&[0, 1, 2], &[2], 7.0, 4.0);
        assert_eq!(
            v.local_mass(&phi, 5, 10.0, LikelihoodMode::Instantaneous),
            0.0
        );
        assert_eq!(
            v.local_mass(&phi, 2, 10.0, LikelihoodMode::Instantaneous),
            0.0
        );
        assert_eq!(
            v.local_mass(&phi, 1, 10.0, LikelihoodMode::Instantaneous),
            phi.global_mass(1, 10.0).unwrap()
        );
        // gate opens at t - omega >= tau (closed)
        assert_eq!(
            v.local_mass(&phi, 2, 11.0, LikelihoodMode::Instantaneous),
            1.0 / 6.0
        );
    }

    #[test]
    fn frozen_mode_reads_last_exchange() {
        let phi = LikelihoodSchedule::new(
            6,
            vec![
                Segment {
                    start: 0.0,
                    masses: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                },
                Segment {
                    start: 5.0,
                    masses: vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                },
            ],
        )
        .unwrap();
        let v = view(&[0, 1], &[], -2.0, 4.0);
        assert_eq!(v.local_mass(&phi, 0, 6.0, LikelihoodMode::Frozen), 1.0);
        assert_eq!(
            v.local_mass(&phi, 0, 6.0, LikelihoodMode::Instantaneous),
            0.0
        );
    }

    #[test]
    fn prohibited_region_examples() {
        let v = view(&[0, 1, 3], &[3], 7.0, 4.0);
        assert_eq!(v.prohibited_region(10.0).to_vec(), vec![3]);
        assert!(v.prohibited_region(11.5).is_empty());
        assert_eq!(v.active_region(10.0).to_vec(), vec![0, 1]);
        assert_eq!(v.active_region(11.5).to_vec(), vec![0, 1, 3]);

        let fresh = view(&[0, 1], &[1], -2.0, 0.0);
        assert!(fresh.prohibited_region(0.0).is_empty());
        let none = view(&[0, 1], &[], 100.0, 0.0);
        assert!(none.prohibited_region(3.0).is_empty());
    }

    #[test]
    fn gaussian_is_normalized_and_peaks_at_center() {
        let grid = GridGeometry {
            rows: 4,
            cols: 4,
            cell_size: 5.0,
        };
        let m = LikelihoodSchedule::gaussian_masses(&grid, [0.0, 0.0], 6.0).unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let argmax = (0..16).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap();
        assert_eq!(argmax, 0);
    }

    #[test]
    fn spec_parsing() {
        let spec: LikelihoodSpec =
            serde_json::from_str(r#"{"type":"gaussian","center":[0,0],"sigma":30}"#).unwrap();
        assert_eq!(
            spec,
            LikelihoodSpec::Gaussian(GaussianSpec {
                center: [0.0, 0.0],
                sigma: 30.0
            })
        );
        let spec: LikelihoodSpec = serde_json::from_str(
            r#"{"type":"schedule","segments":[{"t":0,"masses":[0.5,0.5]},{"t":3,"masses":[1,0]}]}"#,
        )
        .unwrap();
        let g = EnvironmentGraph::new(2, [(0, 1, 1.0)], None).unwrap();
        let phi = LikelihoodSchedule::from_spec(&spec, &g).unwrap();
        assert_eq!(phi.global_mass(0, 3.0).unwrap(), 1.0);
        let gauss: LikelihoodSpec =
            serde_json::from_str(r#"{"type":"gaussian","center":[0,0],"sigma":1}"#).unwrap();
        assert_eq!(
            LikelihoodSchedule::from_spec(&gauss, &g).unwrap_err(),
            LikelihoodError::NoGeometry
        );
    }
}
