use serde::Serialize;

use super::additive::{check_well_posed, grow, Competition};
use super::cost::{candidate_cost, region_candidate};
use super::{AgentId, AgentPayload, BaseStationState, CoverageError, MissionParams};
use crate::graph::{EnvironmentGraph, VertexId};
use crate::likelihood::LikelihoodSchedule;
use crate::vertex_set::VertexSet;

/// Which path through the update an exchange took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateBranch {
    /// Timer still running and nothing was taken away: only the timing
    /// variables are refreshed.
    Hold,
    /// Full candidate search followed by a timer update.
    Search,
}

/// Per-neighbour part of a timer update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimedFrom {
    pub agent: AgentId,
    /// Time agent `agent` needs to leave the claimed vertices.
    pub vacate: f64,
    /// New absolute expiry of its timer.
    pub expiry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimerUpdate {
    /// Time the communicating agent needs to leave vertices it lost.
    pub own_vacate: f64,
    pub claimed_from: Vec<ClaimedFrom>,
    pub delta_max: f64,
    pub tau: f64,
    pub omega: f64,
    /// New absolute expiry of the communicating agent's timer.
    pub expiry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub branch: UpdateBranch,
    pub payload: AgentPayload,
    /// `P_i` before the update.
    pub old_region: VertexSet,
    /// `P_i^ID` before the update.
    pub old_id_region: VertexSet,
    /// Vertices that left `P_i`.
    pub removed: VertexSet,
    /// Vertices newly labelled with agent `i`.
    pub claimed: VertexSet,
    pub timers: Option<TimerUpdate>,
    /// Whether any other agent's timer was running during the search.
    pub blocked: bool,
    /// `H` of the pair the search started from and of the committed pair.
    pub baseline_cost: f64,
    pub cost: f64,
    /// Region or generator of agent `i` changed.
    pub changed: bool,
}

/// Computes the timing consequences of giving agent `i` the region
/// `p_star`, of which `recently_added` is new. Nothing is mutated.
pub fn timer_update(
    state: &BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    i: AgentId,
    p_star: &VertexSet,
    recently_added: &VertexSet,
    t0: f64,
) -> Result<TimerUpdate, CoverageError> {
    let old = &state.covering[i];
    let core = p_star.difference(recently_added);
    let own_vacate = max_vacate(g, old, &old.difference(p_star), &core, params.speeds[i]).ok_or(
        CoverageError::UnreachableCore {
            agent: i,
            vertex: old.difference(p_star).first().unwrap_or(0),
        },
    )?;
    let mut claimed_from = Vec::new();
    let mut delta_max = 0.0_f64;
    for (j, region) in state.covering.iter().enumerate() {
        if j == i {
            continue;
        }
        let lost = region.intersection(p_star);
        if lost.is_empty() {
            continue;
        }
        let keep = region.difference(p_star);
        let vacate = max_vacate(g, region, &lost, &keep, params.speeds[j]).ok_or(
            CoverageError::UnreachableCore {
                agent: j,
                vertex: lost.first().unwrap_or(0),
            },
        )?;
        let expiry = state.last_contact[j] + params.delta_bar;
        delta_max = delta_max.max(expiry + vacate - t0);
        claimed_from.push(ClaimedFrom {
            agent: j,
            vacate,
            expiry,
        });
    }
    let delta_max = delta_max.max(own_vacate);
    Ok(TimerUpdate {
        own_vacate,
        claimed_from,
        delta_max,
        tau: delta_max,
        omega: t0,
        expiry: t0 + delta_max + params.delta_h,
    })
}

/// `max { d_region(k, targets) / s | k ∈ from }`; `None` if some vertex
/// cannot reach `targets`. Empty `from` or empty `targets` give 0.
fn max_vacate(
    g: &EnvironmentGraph,
    region: &VertexSet,
    from: &VertexSet,
    targets: &VertexSet,
    speed: f64,
) -> Option<f64> {
    if from.is_empty() || targets.is_empty() {
        return Some(0.0);
    }
    let seeds: Vec<VertexId> = targets.iter().filter(|&v| region.contains(v)).collect();
    let d = g.raw_distances_within(region, &seeds);
    let mut worst = 0.0_f64;
    for k in from.iter() {
        if !d[k].is_finite() {
            return None;
        }
        worst = worst.max(d[k] / speed);
    }
    Some(worst)
}

/// Runs one exchange between the base station and agent `i` at time `t0`.
pub fn base_update(
    state: &mut BaseStationState,
    g: &EnvironmentGraph,
    params: &MissionParams,
    phi: &LikelihoodSchedule,
    i: AgentId,
    t0: f64,
) -> Result<UpdateOutcome, CoverageError> {
    if i >= state.agent_count() {
        return Err(CoverageError::AgentOutOfRange(i));
    }
    let old_region = state.covering[i].clone();
    let id_region = state.id_region(i);
    let n = g.vertex_count();

    if state.timer(i, t0) > 0.0 && id_region == old_region {
        let omega_prev = state.last_contact[i];
        let payload = &mut state.agents[i];
        payload.tau = payload.tau - t0 + omega_prev;
        payload.omega = t0;
        state.last_contact[i] = t0;
        return Ok(UpdateOutcome {
            branch: UpdateBranch::Hold,
            payload: payload.clone(),
            old_region,
            old_id_region: id_region,
            removed: VertexSet::empty(n),
            claimed: VertexSet::empty(n),
            timers: None,
            blocked: false,
            baseline_cost: f64::NAN,
            cost: f64::NAN,
            changed: false,
        });
    }

    check_well_posed(state, g, i, &id_region)?;
    let masses = phi.masses_at(t0.max(0.0));
    let speed = params.speeds[i];
    let comp = Competition::new(state, g, params, i, t0);
    let blocked = !comp.blocked.is_empty();

    let mut best = region_candidate(g, &id_region, state.generators[i]);
    let baseline_cost = candidate_cost(&comp, &best, speed, masses);
    let mut best_cost = baseline_cost;
    for k in id_region.iter() {
        let cand = grow(g, &comp, &id_region, speed, k);
        let cost = candidate_cost(&comp, &cand, speed, masses);
        if cost < best_cost {
            best = cand;
            best_cost = cost;
        }
    }

    let recently_added = best.set.difference(&id_region);
    let timers = timer_update(state, g, params, i, &best.set, &recently_added, t0)?;
    for c in &timers.claimed_from {
        state.timer_expiry[c.agent] = c.expiry;
    }
    state.timer_expiry[i] = timers.expiry;
    state.last_contact[i] = t0;

    let changed = best.set != old_region || best.generator != state.generators[i];
    let removed = old_region.difference(&best.set);
    for k in best.set.iter() {
        state.identifier[k] = i;
    }
    state.covering[i] = best.set.clone();
    state.generators[i] = best.generator;
    let payload = AgentPayload {
        region: best.set,
        generator: best.generator,
        recently_added: recently_added.clone(),
        tau: timers.tau,
        omega: t0,
    };
    state.agents[i] = payload.clone();

    Ok(UpdateOutcome {
        branch: UpdateBranch::Search,
        payload,
        old_region,
        old_id_region: id_region,
        removed,
        claimed: recently_added,
        timers: Some(timers),
        blocked,
        baseline_cost,
        cost: best_cost,
        changed,
    })
}
