use std::fmt;

use serde::Serialize;

use super::BaseStationState;
use crate::graph::EnvironmentGraph;
use crate::vertex_set::VertexSet;

/// A named structural property of the base-station state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Owner labels split `Q` into `m` nonempty connected parts.
    IdPartition,
    /// Every region is nonempty and connected and the regions cover `Q`.
    ConnectedCovering,
    /// Each generator lies in its region and generators are distinct.
    GeneratorPlacement,
    /// The support of each local likelihood lies inside its region.
    SupportInRegion,
    /// Local likelihood supports of distinct agents never meet.
    DisjointSupports,
    /// A vertex belongs to the region of its owner.
    OwnerMembership,
    /// A vertex belongs to at most two regions.
    AtMostTwoRegions,
    /// With an idle owner timer, only the owner's region holds the vertex.
    IdleOwnerExclusive,
    /// A region holding a foreign vertex meets no third agent's labels.
    ForeignOverlap,
    /// The agent mirror matches the covering and is internally consistent.
    PayloadConsistency,
}

impl Clause {
    pub const ALL: [Clause; 10] = [
        Clause::IdPartition,
        Clause::ConnectedCovering,
        Clause::GeneratorPlacement,
        Clause::SupportInRegion,
        Clause::DisjointSupports,
        Clause::OwnerMembership,
        Clause::AtMostTwoRegions,
        Clause::IdleOwnerExclusive,
        Clause::ForeignOverlap,
        Clause::PayloadConsistency,
    ];

    pub fn description(self) -> &'static str {
        match self {
            Clause::IdPartition => "identifier partition is a connected m-partition",
            Clause::ConnectedCovering => "covering is a connected m-covering",
            Clause::GeneratorPlacement => "generators are distinct and inside their regions",
            Clause::SupportInRegion => "local likelihood support lies in the region",
            Clause::DisjointSupports => "local likelihood supports are pairwise disjoint",
            Clause::OwnerMembership => "every vertex lies in its owner's region",
            Clause::AtMostTwoRegions => "every vertex lies in at most two regions",
            Clause::IdleOwnerExclusive => "an idle owner holds its vertices exclusively",
            Clause::ForeignOverlap => {
                "a region with a foreign vertex meets no third identifier region"
            }
            Clause::PayloadConsistency => "agent payloads match the base station",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub clause: Clause,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated: {}", self.clause.description(), self.detail)
    }
}

/// Checks every structural property of `state` at time `t`. An empty
/// report means the state is clean.
pub fn check_state_invariants(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    t: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |clause: Clause, detail: String| out.push(Violation { clause, detail });
    let m = state.agent_count();
    let n = g.vertex_count();

    if state.identifier.len() != n
        || state.generators.len() != m
        || state.timer_expiry.len() != m
        || state.last_contact.len() != m
        || state.agents.len() != m
    {
        flag(
            Clause::PayloadConsistency,
            "state vectors have inconsistent lengths".into(),
        );
        return out;
    }
    if let Some((k, &a)) = state.identifier.iter().enumerate().find(|&(_, &a)| a >= m) {
        flag(
            Clause::IdPartition,
            format!("vertex {k} labelled with unknown agent {a}"),
        );
        return out;
    }

    let ids = state.id_partition();
    for (i, part) in ids.iter().enumerate() {
        if part.is_empty() {
            flag(Clause::IdPartition, format!("agent {i} owns no vertex"));
        } else if !g.is_connected(part).unwrap_or(false) {
            flag(
                Clause::IdPartition,
                format!("identifier region of agent {i} is disconnected"),
            );
        }
    }

    let mut union = VertexSet::empty(n);
    for (i, region) in state.covering.iter().enumerate() {
        if region.is_empty() {
            flag(
                Clause::ConnectedCovering,
                format!("region of agent {i} is empty"),
            );
        } else if !g.is_connected(region).unwrap_or(false) {
            flag(
                Clause::ConnectedCovering,
                format!("region of agent {i} is disconnected"),
            );
        }
        union.union_with(region);
    }
    if union.len() != n {
        let missing = g.all_vertices().difference(&union);
        flag(
            Clause::ConnectedCovering,
            format!("vertices {missing:?} are in no region"),
        );
    }

    for (i, &c) in state.generators.iter().enumerate() {
        if !state.covering[i].contains(c) {
            flag(
                Clause::GeneratorPlacement,
                format!("generator {c} of agent {i} is outside its region"),
            );
        }
        if state.generators[..i].contains(&c) {
            flag(
                Clause::GeneratorPlacement,
                format!("generator {c} shared by several agents"),
            );
        }
    }

    let active: Vec<VertexSet> = state
        .agents
        .iter()
        .map(|a| a.timing_view().active_region(t))
        .collect();
    for (i, act) in active.iter().enumerate() {
        if !act.is_subset(&state.covering[i]) {
            flag(
                Clause::SupportInRegion,
                format!("agent {i} is active outside its region"),
            );
        }
        for (j, other) in active.iter().enumerate().skip(i + 1) {
            if !act.is_disjoint(other) {
                flag(
                    Clause::DisjointSupports,
                    format!(
                        "agents {i} and {j} are both active on {:?}",
                        act.intersection(other)
                    ),
                );
            }
        }
    }

    for k in 0..n {
        let owner = state.identifier[k];
        if !state.covering[owner].contains(k) {
            flag(
                Clause::OwnerMembership,
                format!("vertex {k} not in the region of its owner {owner}"),
            );
        }
        let holders: Vec<usize> = (0..m).filter(|&j| state.covering[j].contains(k)).collect();
        if holders.len() > 2 {
            flag(
                Clause::AtMostTwoRegions,
                format!("vertex {k} lies in regions {holders:?}"),
            );
        }
        if state.timer(owner, t) == 0.0 {
            if let Some(&j) = holders.iter().find(|&&j| j != owner) {
                flag(
                    Clause::IdleOwnerExclusive,
                    format!("vertex {k} held by agent {j} while owner {owner} is idle"),
                );
            }
        }
        for &j in holders.iter().filter(|&&j| j != owner) {
            for (l, part) in ids.iter().enumerate() {
                if l != j && l != owner && !state.covering[j].is_disjoint(part) {
                    flag(
                        Clause::ForeignOverlap,
                        format!("region of agent {j} holds foreign vertex {k} and meets labels of agent {l}"),
                    );
                }
            }
        }
    }

    for (i, a) in state.agents.iter().enumerate() {
        if a.region != state.covering[i] {
            flag(
                Clause::PayloadConsistency,
                format!("agent {i} region differs from the base station"),
            );
        }
        if a.generator != state.generators[i] {
            flag(
                Clause::PayloadConsistency,
                format!("agent {i} generator differs from the base station"),
            );
        }
        if a.omega != state.last_contact[i] {
            flag(
                Clause::PayloadConsistency,
                format!("agent {i} last exchange differs from the base station"),
            );
        }
        if !a.recently_added.is_subset(&a.region) {
            flag(
                Clause::PayloadConsistency,
                format!("agent {i} recently added vertices escape its region"),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{init_state, MissionParams};
    use crate::graph::WeightMode;

    fn setup() -> (EnvironmentGraph, BaseStationState) {
        let g = EnvironmentGraph::build_grid(3, 3, 1.0, WeightMode::Unit).unwrap();
        let p = MissionParams {
            speeds: vec![1.0; 3],
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 2.0,
        };
        let (state, _) = init_state(&g, &p, &[0, 4, 8]).unwrap();
        (g, state)
    }

    #[test]
    fn initial_state_is_clean() {
        let (g, state) = setup();
        assert_eq!(check_state_invariants(&state, &g, 0.0), vec![]);
    }

    #[test]
    fn owner_outside_region_is_reported() {
        let (g, mut state) = setup();
        let k = state.covering[2].first().unwrap();
        state.identifier[k] = 0;
        let report = check_state_invariants(&state, &g, 0.0);
        assert!(
            report.iter().any(|v| v.clause == Clause::OwnerMembership),
            "{report:?}"
        );
    }

    #[test]
    fn idle_owner_overlap_is_reported() {
        let (g, mut state) = setup();
        let k = state.covering[1]
            .iter()
            .find(|&k| k != state.generators[1])
            .unwrap();
        state.covering[0].insert(k);
        state.agents[0].region.insert(k);
        let report = check_state_invariants(&state, &g, 0.0);
        assert!(
            report
                .iter()
                .any(|v| v.clause == Clause::IdleOwnerExclusive),
            "{report:?}"
        );
        assert!(
            report.iter().any(|v| v.clause == Clause::DisjointSupports),
            "{report:?}"
        );
    }

    #[test]
    fn shared_generator_is_reported() {
        let (g, mut state) = setup();
        state.generators[1] = state.generators[0];
        let report = check_state_invariants(&state, &g, 0.0);
        assert!(report
            .iter()
            .any(|v| v.clause == Clause::GeneratorPlacement));
    }
}
