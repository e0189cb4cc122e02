use std::collections::BTreeSet;

use coverops::coverage::{additive_subset, covering_cost};
use coverops::oracle::{
    all_pairs_within, brute_additive_subset, brute_cost, connected_by_union_find,
    random_additive_instance, random_connected_graph,
};
use coverops::sim::CommScheduler;
use coverops::{Distance, EnvironmentGraph, VertexSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph_and_subset(seed: u64) -> (EnvironmentGraph, VertexSet, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=12);
    let extra = rng.gen_range(0..=n);
    let g = random_connected_graph(&mut rng, n, extra, 5);
    let subset = VertexSet::from_vertices(n, (0..n).filter(|_| rng.gen_bool(0.7)));
    (g, subset, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shrinking_the_subset_never_shortens_distances(seed in any::<u64>()) {
        let (g, big, mut rng) = graph_and_subset(seed);
        let Some(source) = big.first() else { return Ok(()) };
        let small = VertexSet::from_vertices(
            g.vertex_count(),
            big.iter().filter(|&v| v == source || rng.gen_bool(0.6)),
        );
        let d_big = g.distances_within(&big, source).unwrap();
        let d_small = g.distances_within(&small, source).unwrap();
        for v in 0..g.vertex_count() {
            prop_assert!(d_big[v] <= d_small[v], "vertex {v}: {:?} > {:?}", d_big[v], d_small[v]);
        }
    }

    #[test]
    fn dijkstra_matches_floyd_warshall(seed in any::<u64>()) {
        let (g, subset, _) = graph_and_subset(seed);
        let table = all_pairs_within(&g, &subset);
        for s in subset.iter() {
            let d = g.distances_within(&subset, s).unwrap();
            for v in 0..g.vertex_count() {
                prop_assert_eq!(d[v], Distance::from_raw(table[s][v]));
            }
        }
    }

    #[test]
    fn shortest_path_length_equals_distance(seed in any::<u64>()) {
        let (g, subset, mut rng) = graph_and_subset(seed);
        let members = subset.to_vec();
        if members.is_empty() {
            return Ok(());
        }
        let source = members[rng.gen_range(0..members.len())];
        let targets = VertexSet::from_vertices(g.vertex_count(), members.iter().copied().filter(|_| rng.gen_bool(0.3)));
        if targets.is_empty() {
            // distance to nothing is 0 by convention, but there is no path
            prop_assert_eq!(g.subgraph_distance(&subset, source, &targets).unwrap(), Distance::Finite(0.0));
            prop_assert!(g.shortest_path_in_subset(&subset, source, &targets).is_err());
            return Ok(());
        }
        match g.subgraph_distance(&subset, source, &targets).unwrap() {
            Distance::Finite(d) => {
                let path = g.shortest_path_in_subset(&subset, source, &targets).unwrap();
                prop_assert_eq!(path[0], source);
                prop_assert!(targets.contains(*path.last().unwrap()));
                prop_assert!(path.iter().all(|&v| subset.contains(v)));
                prop_assert_eq!(g.path_length(&path).unwrap(), d);
            }
            Distance::Infinite => {
                prop_assert!(g.shortest_path_in_subset(&subset, source, &targets).is_err());
            }
        }
    }

    #[test]
    fn connectivity_agrees_with_union_find(seed in any::<u64>()) {
        let (g, subset, _) = graph_and_subset(seed);
        if subset.is_empty() {
            prop_assert!(g.is_connected(&subset).is_err());
        } else {
            prop_assert_eq!(g.is_connected(&subset).unwrap(), connected_by_union_find(&g, &subset));
        }
    }

    #[test]
    fn additive_subset_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_additive_instance(&mut rng, 9);
        for k in inst.state.id_region(inst.agent).iter() {
            let fast = additive_subset(&inst.state, &inst.graph, &inst.params, inst.agent, k, inst.time).unwrap();
            let slow = brute_additive_subset(&inst.state, &inst.graph, &inst.params, inst.agent, k, inst.time);
            prop_assert!(slow.unique);
            prop_assert_eq!(fast.set.to_vec(), slow.set.to_vec());
            // recorded distances are true distances inside the result
            let table = all_pairs_within(&inst.graph, &fast.set);
            for v in 0..inst.graph.vertex_count() {
                prop_assert_eq!(fast.distances[v], table[k][v]);
            }
        }
    }

    #[test]
    fn covering_cost_matches_floyd_warshall(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_additive_instance(&mut rng, 10);
        let n = inst.graph.vertex_count();
        let raw: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0u32..8))).collect();
        let total: f64 = raw.iter().sum::<f64>().max(1.0);
        let masses: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let s = &inst.state;
        let fast = covering_cost(&inst.graph, &inst.params.speeds, &s.covering, &s.generators, &masses);
        let slow = brute_cost(&inst.graph, &inst.params.speeds, &s.covering, &s.generators, &masses);
        prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0), "{fast} vs {slow}");
    }

    #[test]
    fn vertex_set_algebra_matches_btreeset(a in prop::collection::vec(0usize..40, 0..30), b in prop::collection::vec(0usize..40, 0..30)) {
        let sa = VertexSet::from_vertices(40, a.iter().copied());
        let sb = VertexSet::from_vertices(40, b.iter().copied());
        let ba: BTreeSet<usize> = a.iter().copied().collect();
        let bb: BTreeSet<usize> = b.iter().copied().collect();
        prop_assert_eq!(sa.union(&sb).to_vec(), ba.union(&bb).copied().collect::<Vec<_>>());
        prop_assert_eq!(sa.intersection(&sb).to_vec(), ba.intersection(&bb).copied().collect::<Vec<_>>());
        prop_assert_eq!(sa.difference(&sb).to_vec(), ba.difference(&bb).copied().collect::<Vec<_>>());
        prop_assert_eq!(sa.is_subset(&sb), ba.is_subset(&bb));
        prop_assert_eq!(sa.is_disjoint(&sb), ba.is_disjoint(&bb));
        prop_assert_eq!(sa.len(), ba.len());
    }

    #[test]
    fn scheduler_meets_both_gap_bounds(seed in any::<u64>(), m in 1usize..6, slack in 0.0f64..5.0) {
        let lower = 1.0;
        let bar = m as f64 * lower + slack;
        let mut sched = CommScheduler::new(seed, lower, vec![bar; m]);
        let mut last = vec![0.0; m];
        let mut prev = 0.0;
        for _ in 0..300 {
            let deadlines: Vec<f64> = last.iter().map(|w| w + bar).collect();
            let (a, t) = sched.next(&deadlines).unwrap();
            prop_assert!(t - prev >= lower - 1e-9);
            prop_assert!(t - last[a] <= bar + 1e-9);
            for (j, w) in last.iter().enumerate() {
                prop_assert!(t <= w + bar + 1e-9, "agent {j} missed its deadline");
            }
            last[a] = t;
            prev = t;
        }
    }
}
