//! Brute-force reference computations.
//!
//! Everything here is deliberately naive and independent of the production
//! code paths: all-pairs distances by Floyd–Warshall, additive subsets by
//! enumerating every superset, costs by direct summation. Used by the test
//! suites, the `check` command and the property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::coverage::{AgentId, AgentPayload, BaseStationState, MissionParams};
use crate::graph::{EnvironmentGraph, VertexId};
use crate::vertex_set::VertexSet;

/// Floyd–Warshall on the subgraph induced by `subset`; `INFINITY` for
/// unreachable pairs and for vertices outside `subset`.
pub fn all_pairs_within(g: &EnvironmentGraph, subset: &VertexSet) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for v in subset.iter() {
        d[v][v] = 0.0;
    }
    for e in g.edges() {
        if subset.contains(e.a) && subset.contains(e.b) {
            d[e.a][e.b] = d[e.a][e.b].min(e.weight);
            d[e.b][e.a] = d[e.b][e.a].min(e.weight);
        }
    }
    for via in subset.iter() {
        for a in subset.iter() {
            for b in subset.iter() {
                let alt = d[a][via] + d[via][b];
                if alt < d[a][b] {
                    d[a][b] = alt;
                }
            }
        }
    }
    d
}

/// Union-find connectivity of the induced subgraph.
pub fn connected_by_union_find(g: &EnvironmentGraph, subset: &VertexSet) -> bool {
    let n = g.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in g.edges() {
        if subset.contains(e.a) && subset.contains(e.b) {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            parent[ra] = rb;
        }
    }
    let mut roots = subset.iter().map(|v| find(&mut parent, v));
    match roots.next() {
        None => false,
        Some(r) => roots.all(|x| x == r),
    }
}

/// Outcome of the enumeration: the maximal valid set, and whether it
/// contains every other valid set (uniqueness of the maximum).
#[derive(Debug, Clone, PartialEq)]
pub struct BruteAdditive {
    pub set: VertexSet,
    pub unique: bool,
}

/// Enumerates every superset of `P_i^ID` and keeps the largest one that is
/// connected and satisfies the borrowing conditions. Only for small graphs.
pub fn brute_additive_subset(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    i: AgentId,
    k: VertexId,
    t: f64,
) -> BruteAdditive {
    let n = g.vertex_count();
    assert!(n <= 20, "enumeration oracle is for small graphs");
    let id: Vec<bool> = (0..n).map(|v| state.identifier[v] == i).collect();
    let outside: Vec<VertexId> = (0..n).filter(|&v| !id[v]).collect();
    let owner_dist: Vec<Vec<Vec<f64>>> = state
        .covering
        .iter()
        .map(|r| all_pairs_within(g, r))
        .collect();

    let mut valid: Vec<VertexSet> = Vec::new();
    for mask in 0u32..(1u32 << outside.len()) {
        let mut s = VertexSet::from_vertices(n, (0..n).filter(|&v| id[v]));
        for (bit, &v) in outside.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                s.insert(v);
            }
        }
        if !connected_by_union_find(g, &s) {
            continue;
        }
        let ds = all_pairs_within(g, &s);
        let ok = s.iter().filter(|&h| !id[h]).all(|h| {
            (0..state.agent_count())
                .filter(|&j| j != i && state.covering[j].contains(h))
                .all(|j| {
                    let idle = state.timer_expiry[j] <= t;
                    let mine = ds[h][k] / params.speeds[i];
                    let theirs = owner_dist[j][h][state.generators[j]] / params.speeds[j];
                    idle && mine < theirs
                })
        });
        if ok {
            valid.push(s);
        }
    }
    let best = valid
        .iter()
        .max_by_key(|s| s.len())
        .cloned()
        .expect("P_i^ID itself is always valid");
    let unique = valid.iter().all(|s| s.is_subset(&best));
    BruteAdditive { set: best, unique }
}

/// `H` summed vertex by vertex from Floyd–Warshall distances.
pub fn brute_cost(
    g: &EnvironmentGraph,
    speeds: &[f64],
    covering: &[VertexSet],
    generators: &[VertexId],
    masses: &[f64],
) -> f64 {
    let tables: Vec<Vec<Vec<f64>>> = covering.iter().map(|r| all_pairs_within(g, r)).collect();
    let mut total = 0.0;
    for k in 0..g.vertex_count() {
        let responses: Vec<f64> = (0..covering.len())
            .filter(|&i| covering[i].contains(k))
            .map(|i| tables[i][k][generators[i]] / speeds[i])
            .collect();
        if responses.is_empty() || masses[k] == 0.0 {
            continue;
        }
        total += responses.iter().copied().fold(f64::INFINITY, f64::min) * masses[k];
    }
    total
}

/// Random connected graph: a random spanning tree plus extra edges, with
/// small integer weights so that every distance is exact in floating point.
pub fn random_connected_graph<R: Rng>(
    rng: &mut R,
    n: usize,
    extra_edges: usize,
    max_weight: u32,
) -> EnvironmentGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut present = std::collections::BTreeSet::new();
    for idx in 1..n {
        let a = order[idx];
        let b = order[rng.gen_range(0..idx)];
        present.insert((a.min(b), a.max(b)));
        edges.push((a, b, rng.gen_range(1..=max_weight) as f64));
    }
    for _ in 0..extra_edges {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && present.insert((a.min(b), a.max(b))) {
            edges.push((a, b, rng.gen_range(1..=max_weight) as f64));
        }
    }
    EnvironmentGraph::new(n, edges, None).expect("generated graph is valid")
}

/// Splits `g` into `m` connected parts grown from random distinct seeds.
/// The seeds are returned as generators. `None` if `m > n`.
pub fn random_connected_partition<R: Rng>(
    rng: &mut R,
    g: &EnvironmentGraph,
    m: usize,
) -> Option<(Vec<usize>, Vec<VertexId>)> {
    let n = g.vertex_count();
    if m > n {
        return None;
    }
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let seeds: Vec<VertexId> = all[..m].to_vec();
    let mut owner = vec![usize::MAX; n];
    for (i, &s) in seeds.iter().enumerate() {
        owner[s] = i;
    }
    let mut assigned = m;
    while assigned < n {
        // pick a random (unowned vertex, owned neighbour) frontier pair
        let frontier: Vec<(usize, usize)> = (0..n)
            .filter(|&v| owner[v] == usize::MAX)
            .flat_map(|v| {
                g.neighbors(v)
                    .iter()
                    .filter(|(nb, _)| owner[*nb] != usize::MAX)
                    .map(move |&(nb, _)| (v, nb))
            })
            .collect();
        let &(v, nb) = frontier.choose(rng)?;
        owner[v] = owner[nb];
        assigned += 1;
    }
    Some((owner, seeds))
}

/// A base-station state in which agent `agent` may legally run an update:
/// its identifier region is connected and disjoint from every other region.
/// Other agents' regions may overlap each other's labels, and timers are
/// random.
#[derive(Debug, Clone)]
pub struct AdditiveInstance {
    pub graph: EnvironmentGraph,
    pub params: MissionParams,
    pub state: BaseStationState,
    pub agent: AgentId,
    pub time: f64,
}

pub fn random_additive_instance<R: Rng>(rng: &mut R, max_vertices: usize) -> AdditiveInstance {
    loop {
        let n = rng.gen_range(3..=max_vertices);
        let m = rng.gen_range(2..=3.min(n));
        let extra = rng.gen_range(0..=n);
        let g = random_connected_graph(rng, n, extra, 4);
        let Some((owner, seeds)) = random_connected_partition(rng, &g, m) else {
            continue;
        };
        let speeds: Vec<f64> = (0..m)
            .map(|_| *[0.5, 1.0, 1.0, 2.0].choose(rng).unwrap())
            .collect();
        let params = MissionParams {
            speeds,
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 2.0,
        };
        let agent = rng.gen_range(0..m);
        let mut covering: Vec<VertexSet> = (0..m)
            .map(|j| VertexSet::from_vertices(n, (0..n).filter(|&v| owner[v] == j)))
            .collect();
        // let other agents keep a stale claim on a neighbour's labels
        for j in (0..m).filter(|&j| j != agent) {
            if rng.gen_bool(0.3) {
                let grab: Vec<usize> = (0..n)
                    .filter(|&v| owner[v] != j && owner[v] != agent && v != seeds[owner[v]])
                    .filter(|&v| {
                        g.neighbors(v)
                            .iter()
                            .any(|(nb, _)| covering[j].contains(*nb))
                    })
                    .collect();
                if let Some(&v) = grab.choose(rng) {
                    covering[j].insert(v);
                }
            }
        }
        let time = 5.0;
        let timer_expiry: Vec<f64> = (0..m)
            .map(|j| {
                if j != agent && rng.gen_bool(0.25) {
                    time + rng.gen_range(1.0..5.0)
                } else {
                    0.0
                }
            })
            .collect();
        let agents = (0..m)
            .map(|j| AgentPayload {
                region: covering[j].clone(),
                generator: seeds[j],
                recently_added: VertexSet::empty(n),
                tau: -params.delta_h,
                omega: 0.0,
            })
            .collect();
        let state = BaseStationState {
            covering,
            generators: seeds,
            identifier: owner,
            timer_expiry,
            last_contact: vec![0.0; m],
            agents,
        };
        return AdditiveInstance {
            graph: g,
            params,
            state,
            agent,
            time,
        };
    }
}
