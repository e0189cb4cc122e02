use serde::Serialize;

use super::trace::{EventKind, SimTrace};
use crate::likelihood::LikelihoodSchedule;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Longest uncovered interval of each vertex (0 if never uncovered).
    pub max_uncovered_per_vertex: Vec<f64>,
    pub max_uncovered: f64,
    /// `(time, H)` step series.
    pub cost_series: Vec<(f64, f64)>,
    /// Share of total agent-time spent at each vertex.
    pub occupancy_distribution: Vec<f64>,
    /// `(checkpoint, TV(occupancy, Φ))`.
    pub total_variation: Vec<(f64, f64)>,
    pub collision_count: usize,
    pub violation_count: usize,
    pub comm_count: usize,
    /// Detection time of the first convergence report, if any.
    pub converged_at: Option<f64>,
}

/// Normalizes `occupancy` and returns `½ Σ |occ − Φ|`. An empty histogram
/// is at distance 1 from anything.
pub fn total_variation(occupancy: &[f64], masses: &[f64]) -> f64 {
    let total: f64 = occupancy.iter().sum();
    if !(total > 0.0) {
        return 1.0;
    }
    0.5 * occupancy
        .iter()
        .zip(masses)
        .map(|(o, p)| (o / total - p).abs())
        .sum::<f64>()
}

fn normalized(occupancy: &[f64]) -> Vec<f64> {
    let total: f64 = occupancy.iter().sum();
    if total > 0.0 {
        occupancy.iter().map(|o| o / total).collect()
    } else {
        vec![0.0; occupancy.len()]
    }
}

pub fn compute_metrics(trace: &SimTrace, phi: &LikelihoodSchedule) -> Metrics {
    let max_uncovered_per_vertex: Vec<f64> = trace
        .uncovered
        .iter()
        .map(|iv| iv.iter().map(|i| i.length()).fold(0.0, f64::max))
        .collect();
    let max_uncovered = max_uncovered_per_vertex.iter().copied().fold(0.0, f64::max);
    let total_variation = trace
        .checkpoints
        .iter()
        .map(|c| (c.time, total_variation(&c.occupancy, phi.masses_at(c.time))))
        .collect();
    Metrics {
        max_uncovered_per_vertex,
        max_uncovered,
        cost_series: trace
            .cost_samples
            .iter()
            .map(|s| (s.time, s.cost))
            .collect(),
        occupancy_distribution: normalized(&trace.occupancy),
        total_variation,
        collision_count: trace.collisions.len(),
        violation_count: trace.violations.len(),
        comm_count: trace
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Comm)
            .count(),
        converged_at: trace.convergence.first().map(|c| c.detected_at),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_histogram_has_zero_distance() {
        assert_eq!(total_variation(&[2.0, 6.0], &[0.25, 0.75]), 0.0);
    }

    #[test]
    fn disjoint_support_has_distance_one() {
        assert_eq!(total_variation(&[0.0, 3.0], &[1.0, 0.0]), 1.0);
        assert_eq!(total_variation(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn distance_is_half_the_l1_gap() {
        let tv = total_variation(&[1.0, 1.0, 2.0], &[0.5, 0.25, 0.25]);
        assert!((tv - 0.25).abs() < 1e-15);
    }
}
