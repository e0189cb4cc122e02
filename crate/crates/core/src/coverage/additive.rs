use super::{AgentId, BaseStationState, CoverageError, MissionParams};
use crate::graph::{DistQueue, EnvironmentGraph, VertexId};
use crate::vertex_set::VertexSet;

/// How the rest of the covering looks from agent `i`'s point of view.
///
/// Built once per exchange and shared by every candidate generator.
#[derive(Debug, Clone)]
pub(crate) struct Competition {
    /// `min (1/s_j) d_{P_j}(h, c_j)` over `j ≠ i` with `h ∈ P_j`.
    pub other_best: Vec<f64>,
    /// `h` lies in some `P_j`, `j ≠ i`.
    pub other_covers: VertexSet,
    /// `h` lies in some `P_j`, `j ≠ i`, whose timer is still running.
    pub blocked: VertexSet,
}

impl Competition {
    pub fn new(
        state: &BaseStationState,
        g: &EnvironmentGraph,
        params: &MissionParams,
        i: AgentId,
        t: f64,
    ) -> Self {
        let n = g.vertex_count();
        let mut other_best = vec![f64::INFINITY; n];
        let mut other_covers = VertexSet::empty(n);
        let mut blocked = VertexSet::empty(n);
        for (j, region) in state.covering.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = g.raw_distances_within(region, &[state.generators[j]]);
            let s = params.speeds[j];
            for h in region.iter() {
                other_best[h] = other_best[h].min(d[h] / s);
            }
            other_covers.union_with(region);
            if state.timer(j, t) > 0.0 {
                blocked.union_with(region);
            }
        }
        Self {
            other_best,
            other_covers,
            blocked,
        }
    }
}

/// An additive subset together with the within-subset distances from its
/// candidate generator (raw lengths, `INFINITY` outside the set).
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveSubset {
    pub generator: VertexId,
    pub set: VertexSet,
    pub distances: Vec<f64>,
}

/// Checks that `P_i^ID` is connected, disjoint from every other `P_j`, and
/// contains `k`.
pub(crate) fn check_well_posed(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    i: AgentId,
    id_region: &VertexSet,
) -> Result<(), CoverageError> {
    let ill = |reason: String| CoverageError::IllPosed { agent: i, reason };
    if id_region.is_empty() || !g.is_connected(id_region)? {
        return Err(ill("identifier region is empty or disconnected".into()));
    }
    for (j, region) in state.covering.iter().enumerate() {
        if j != i && !region.is_disjoint(id_region) {
            return Err(ill(format!(
                "identifier region overlaps the region of agent {j}"
            )));
        }
    }
    Ok(())
}

/// Best-first growth from `k`.
///
/// Vertices of `P_i^ID` are always kept. An outside vertex `h` is admitted
/// when it is settled at distance `d` with no running owner timer and
/// `d / s_i` strictly below every owner's own scaled distance. Settling order
/// makes every later path to `h` at least as long, so a rejection is final
/// and the admitted set is the maximal one. The recorded distances equal a
/// fresh shortest-path run on the final set.
pub(crate) fn grow(
    g: &EnvironmentGraph,
    comp: &Competition,
    id_region: &VertexSet,
    speed: f64,
    k: VertexId,
) -> AdditiveSubset {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut set = VertexSet::empty(n);
    let mut rejected = VertexSet::empty(n);
    let mut queue = DistQueue::default();
    dist[k] = 0.0;
    queue.push(0.0, k);
    while let Some((d, v)) = queue.pop() {
        if d > dist[v] || set.contains(v) || rejected.contains(v) {
            continue;
        }
        let admit =
            id_region.contains(v) || (!comp.blocked.contains(v) && d / speed < comp.other_best[v]);
        if !admit {
            rejected.insert(v);
            dist[v] = f64::INFINITY;
            continue;
        }
        set.insert(v);
        for &(nb, w) in g.neighbors(v) {
            if set.contains(nb) || rejected.contains(nb) {
                continue;
            }
            let nd = d + w;
            if nd < dist[nb] {
                dist[nb] = nd;
                queue.push(nd, nb);
            }
        }
    }
    // tentative values left on never-settled vertices are not distances in the set
    for (v, d) in dist.iter_mut().enumerate() {
        if !set.contains(v) {
            *d = f64::INFINITY;
        }
    }
    AdditiveSubset {
        generator: k,
        set,
        distances: dist,
    }
}

/// `P_i^add(k)` at time `t`: the largest connected superset of `P_i^ID` in
/// which every borrowed vertex has idle owners and is strictly closer (in
/// time) to `k` than to each owner's generator.
pub fn additive_subset(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    i: AgentId,
    k: VertexId,
    t: f64,
) -> Result<AdditiveSubset, CoverageError> {
    if i >= state.agent_count() {
        return Err(CoverageError::AgentOutOfRange(i));
    }
    let id_region = state.id_region(i);
    if !id_region.contains(k) {
        return Err(CoverageError::NotOwned {
            agent: i,
            vertex: k,
        });
    }
    check_well_posed(state, g, i, &id_region)?;
    let comp = Competition::new(state, g, params, i, t);
    Ok(grow(g, &comp, &id_region, params.speeds[i], k))
}
