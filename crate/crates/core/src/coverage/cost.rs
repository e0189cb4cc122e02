use super::additive::{AdditiveSubset, Competition};
use super::{BaseStationState, MissionParams};
use crate::graph::{EnvironmentGraph, VertexId};
use crate::likelihood::LikelihoodSchedule;
use crate::vertex_set::VertexSet;

// Both entry points below reduce to the same per-vertex term and the same
// ascending summation, so a candidate evaluated during an update and the
// cost of the committed state agree bit for bit.

#[inline]
fn term(covered: bool, best: f64, mass: f64) -> f64 {
    if !covered || mass == 0.0 {
        0.0
    } else {
        best * mass
    }
}

/// Expected response time of `(generators, covering)` under `masses`.
///
/// A vertex in no region contributes nothing (`min ∅ = 0`); a vertex whose
/// containing regions cannot reach it from their generators contributes
/// `INFINITY` when it carries mass.
pub fn covering_cost(
    g: &EnvironmentGraph,
    speeds: &[f64],
    covering: &[VertexSet],
    generators: &[VertexId],
    masses: &[f64],
) -> f64 {
    let n = g.vertex_count();
    let mut best = vec![f64::INFINITY; n];
    let mut covered = VertexSet::empty(n);
    for ((region, &c), &s) in covering.iter().zip(generators).zip(speeds) {
        let d = g.raw_distances_within(region, &[c]);
        for h in region.iter() {
            best[h] = best[h].min(d[h] / s);
        }
        covered.union_with(region);
    }
    (0..n)
        .map(|h| term(covered.contains(h), best[h], masses[h]))
        .fold(0.0, |acc, x| acc + x)
}

/// `H(c, P, t)` for the base station's current covering and generators.
pub fn coverage_cost(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    phi: &LikelihoodSchedule,
    t: f64,
) -> f64 {
    covering_cost(
        g,
        &params.speeds,
        &state.covering,
        &state.generators,
        phi.masses_at(t.max(0.0)),
    )
}

/// Cost of the covering obtained by replacing agent `i`'s region and
/// generator with `own`, everything else unchanged.
pub(crate) fn candidate_cost(
    comp: &Competition,
    own: &AdditiveSubset,
    speed: f64,
    masses: &[f64],
) -> f64 {
    (0..masses.len())
        .map(|h| {
            let mine = own.distances[h] / speed;
            let covered = comp.other_covers.contains(h) || own.set.contains(h);
            term(covered, comp.other_best[h].min(mine), masses[h])
        })
        .fold(0.0, |acc, x| acc + x)
}

/// Same as [`candidate_cost`] for an arbitrary region with distances from
/// `generator` computed inside it.
pub(crate) fn region_candidate(
    g: &EnvironmentGraph,
    region: &VertexSet,
    generator: VertexId,
) -> AdditiveSubset {
    let mut distances = g.raw_distances_within(region, &[generator]);
    for (v, d) in distances.iter_mut().enumerate() {
        if !region.contains(v) {
            *d = f64::INFINITY;
        }
    }
    AdditiveSubset {
        generator,
        set: region.clone(),
        distances,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::init_state;

    #[test]
    fn all_mass_at_generator_costs_nothing() {
        let g = EnvironmentGraph::build_grid(3, 3, 1.0, crate::graph::WeightMode::Unit).unwrap();
        let mut masses = vec![0.0; 9];
        masses[4] = 1.0;
        let cost = covering_cost(&g, &[1.0], &[g.all_vertices()], &[4], &masses);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn two_vertex_uniform() {
        let w = 3.0;
        let s = 2.0;
        let g = EnvironmentGraph::new(2, [(0, 1, w)], None).unwrap();
        let cost = covering_cost(&g, &[s], &[g.all_vertices()], &[0], &[0.5, 0.5]);
        assert_eq!(cost, 0.5 * w / s);
    }

    #[test]
    fn uncovered_vertex_contributes_nothing_unreachable_is_infinite() {
        let g = EnvironmentGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
        let masses = [1.0 / 3.0; 3];
        let partial = covering_cost(
            &g,
            &[1.0],
            &[VertexSet::from_vertices(3, [0, 1])],
            &[0],
            &masses,
        );
        assert_eq!(partial, 1.0 / 3.0);
        let broken = covering_cost(
            &g,
            &[1.0],
            &[VertexSet::from_vertices(3, [0, 2])],
            &[0],
            &masses,
        );
        assert_eq!(broken, f64::INFINITY);
    }

    #[test]
    fn overlapping_regions_take_the_faster_response() {
        let g = EnvironmentGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
        let all = g.all_vertices();
        let cost = covering_cost(
            &g,
            &[1.0, 1.0],
            &[all.clone(), all],
            &[0, 2],
            &[0.0, 1.0, 0.0],
        );
        assert_eq!(cost, 1.0);
    }

    #[test]
    fn candidate_matches_full_recomputation() {
        let g = EnvironmentGraph::build_grid(4, 4, 1.0, crate::graph::WeightMode::Unit).unwrap();
        let params = MissionParams {
            speeds: vec![1.0, 2.0],
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 2.0,
        };
        let (state, _) = init_state(&g, &params, &[0, 15]).unwrap();
        let phi = LikelihoodSchedule::uniform(16);
        let comp = Competition::new(&state, &g, &params, 0, 0.0);
        let own = region_candidate(&g, &state.covering[0], state.generators[0]);
        let via_candidate = candidate_cost(&comp, &own, 1.0, phi.masses_at(0.0));
        assert_eq!(
            via_candidate.to_bits(),
            coverage_cost(&state, &g, &params, &phi, 0.0).to_bits()
        );
    }
}
