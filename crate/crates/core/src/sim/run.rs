use super::collision::detect_collision;
use super::config::{PreparedConfig, SimConfig};
use super::schedule::CommScheduler;
use super::trace::{
    CheckKind, ConvergenceReport, CostSample, Event, EventKind, OccupancyCheckpoint, RetreatRecord,
    RuntimeViolation, SimTrace, UncoveredInterval,
};
use super::SimError;
use crate::agent::{
    advance_motion, build_planner, on_communication, MotionError, MotionMode, MotionState, Planner,
};
use crate::coverage::{
    base_update, check_state_invariants, coverage_cost, covering_cost, init_state,
    pareto_certificate, BaseStationState, CoverageError, MissionParams, ParetoMode, UpdateBranch,
    UpdateOutcome,
};
use crate::graph::EnvironmentGraph;
use crate::likelihood::LikelihoodSchedule;
use crate::vertex_set::VertexSet;

/// Relative tolerance for floating-point comparisons of costs.
const COST_TOLERANCE: f64 = 1e-9;
/// Absolute slack on time comparisons in runtime checks.
const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Stop at the first failed runtime check instead of recording and going on.
    pub abort_on_violation: bool,
    /// Reject planner moves that leave the active region or skip an edge.
    pub enforce_planner_contract: bool,
    /// Log every vertex arrival as an event.
    pub record_arrivals: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            abort_on_violation: true,
            enforce_planner_contract: true,
            record_arrivals: true,
        }
    }
}

/// Validates `config` and runs it with default options.
pub fn run(config: &SimConfig) -> Result<SimTrace, SimError> {
    run_prepared(&config.prepare()?, &SimOptions::default())
}

/// Runs with the planner named in the configuration, one instance per agent.
pub fn run_prepared(prep: &PreparedConfig, opts: &SimOptions) -> Result<SimTrace, SimError> {
    let seed = prep.config.seed;
    let planners = (0..prep.params().agent_count())
        .map(|i| {
            build_planner(
                prep.config.planner,
                seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(i as u64),
            )
        })
        .collect();
    run_with_planners(prep, opts, planners)
}

/// Runs with caller-supplied planners, e.g. deliberately faulty ones.
pub fn run_with_planners(
    prep: &PreparedConfig,
    opts: &SimOptions,
    planners: Vec<Box<dyn Planner>>,
) -> Result<SimTrace, SimError> {
    if planners.len() != prep.params().agent_count() {
        return Err(SimError::Config(format!(
            "{} planners supplied for {} agents",
            planners.len(),
            prep.params().agent_count()
        )));
    }
    let mut engine = Engine::new(prep, opts, planners)?;
    engine.run()?;
    Ok(engine.finish())
}

/// Vertices that just left a prohibited region and must stay covered.
struct Protection {
    agent: usize,
    until: f64,
    vertices: VertexSet,
}

struct Convergence {
    segment: usize,
    last_change: f64,
    confirmed: Vec<bool>,
    reported: bool,
}

struct Engine<'a> {
    prep: &'a PreparedConfig,
    opts: &'a SimOptions,
    g: &'a EnvironmentGraph,
    params: &'a MissionParams,
    phi: &'a LikelihoodSchedule,
    duration: f64,
    state: BaseStationState,
    motions: Vec<MotionState>,
    planners: Vec<Box<dyn Planner>>,
    scheduler: CommScheduler,
    next_comm: (usize, f64),
    switches: Vec<f64>,
    checkpoints: Vec<f64>,
    snapshot_times: Vec<f64>,
    segment: usize,
    last_comm: Vec<f64>,
    last_global_comm: f64,
    prev_cost: Option<f64>,
    uncovered_since: Vec<Option<f64>>,
    /// Per agent: whether the current gate opening has been seen.
    gate_seen: Vec<bool>,
    protections: Vec<Protection>,
    conv: Convergence,
    trace: SimTrace,
}

impl<'a> Engine<'a> {
    fn new(
        prep: &'a PreparedConfig,
        opts: &'a SimOptions,
        planners: Vec<Box<dyn Planner>>,
    ) -> Result<Self, SimError> {
        let g = &prep.graph;
        let params = prep.params();
        let n = g.vertex_count();
        let m = params.agent_count();
        let (state, _) = init_state(g, params, &prep.generators)?;
        let motions = (0..m)
            .map(|i| MotionState::new(i, params.speeds[i], prep.generators[i], n))
            .collect();
        let horizons: Vec<f64> = prep
            .deadline_reserve
            .iter()
            .map(|r| params.delta_bar - r)
            .collect();
        let mut scheduler =
            CommScheduler::new(prep.config.seed, params.delta_lower, horizons.clone());
        let deadlines: Vec<f64> = state
            .last_contact
            .iter()
            .zip(&horizons)
            .map(|(w, h)| w + h)
            .collect();
        let next_comm = scheduler.next(&deadlines)?;
        let duration = prep.config.duration;
        let within = |ts: &[f64]| -> Vec<f64> {
            let mut v: Vec<f64> = ts.iter().copied().filter(|&t| t <= duration).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let switches = within(&prep.phi.switch_times().collect::<Vec<_>>());
        let trace = SimTrace {
            duration,
            agent_count: m,
            events: Vec::new(),
            cost_samples: Vec::new(),
            occupancy: vec![0.0; n],
            checkpoints: Vec::new(),
            uncovered: vec![Vec::new(); n],
            collisions: Vec::new(),
            violations: Vec::new(),
            convergence: Vec::new(),
            retreats: Vec::new(),
            snapshots: Vec::new(),
            max_cost_identity_gap: 0.0,
            final_state: state.clone(),
        };
        Ok(Self {
            prep,
            opts,
            g,
            params,
            phi: &prep.phi,
            duration,
            state,
            motions,
            planners,
            scheduler,
            next_comm,
            switches,
            checkpoints: within(&prep.config.checkpoints),
            snapshot_times: within(&prep.config.snapshot_times),
            segment: 0,
            last_comm: vec![0.0; m],
            last_global_comm: 0.0,
            prev_cost: None,
            uncovered_since: vec![None; n],
            gate_seen: vec![true; m],
            protections: Vec::new(),
            conv: Convergence {
                segment: 0,
                last_change: 0.0,
                confirmed: vec![false; m],
                reported: false,
            },
            trace,
        })
    }

    fn violate(&mut self, time: f64, check: CheckKind, detail: String) -> Result<(), SimError> {
        self.report(RuntimeViolation {
            time,
            check,
            clause: None,
            detail,
        })
    }

    fn report(&mut self, v: RuntimeViolation) -> Result<(), SimError> {
        let (time, check, detail) = (v.time, v.check, v.detail.clone());
        self.trace.violations.push(v);
        if self.opts.abort_on_violation {
            return Err(SimError::Violation {
                time,
                check,
                detail,
            });
        }
        Ok(())
    }

    fn run(&mut self) -> Result<(), SimError> {
        let cost = coverage_cost(&self.state, self.g, self.params, self.phi, 0.0);
        self.trace.cost_samples.push(CostSample {
            time: 0.0,
            cost,
            segment: 0,
        });
        self.prev_cost = Some(cost);
        self.record_timed_outputs(0.0);
        self.after_boundary(0.0)?;
        let mut t = 0.0;
        while t < self.duration {
            let next = self.next_boundary(t);
            self.advance(t, next)?;
            t = next;
            if self.switches.first() == Some(&t) {
                self.switches.remove(0);
                self.on_switch(t);
            }
            if self.next_comm.1 == t {
                self.on_comm(self.next_comm.0, t)?;
                let deadlines: Vec<f64> = (0..self.params.agent_count())
                    .map(|i| {
                        self.state.last_contact[i] + self.params.delta_bar
                            - self.prep.deadline_reserve[i]
                    })
                    .collect();
                self.next_comm = self.scheduler.next(&deadlines)?;
            }
            self.record_timed_outputs(t);
            self.after_boundary(t)?;
        }
        self.close_uncovered(self.duration)
    }

    fn next_boundary(&self, t: f64) -> f64 {
        let mut next = self.duration.min(self.next_comm.1);
        let firsts = [
            self.switches.first(),
            self.checkpoints.first(),
            self.snapshot_times.first(),
        ];
        for &s in firsts.into_iter().flatten() {
            next = next.min(s);
        }
        for a in &self.state.agents {
            let gate = a.omega + a.tau;
            if gate > t {
                next = next.min(gate);
            }
        }
        next
    }

    /// Moves every agent from `t` to `next` and scans the interval for collisions.
    fn advance(&mut self, t: f64, next: f64) -> Result<(), SimError> {
        let mut records = Vec::new();
        let mut arrivals = Vec::new();
        let mode = self.prep.config.likelihood_mode;
        for i in 0..self.motions.len() {
            let view = self.state.timing_view(i);
            let log = advance_motion(
                self.g,
                &mut self.motions[i],
                &view,
                self.phi,
                mode,
                self.planners[i].as_mut(),
                t,
                next,
                self.opts.enforce_planner_contract,
            )?;
            records.extend(log.records);
            arrivals.extend(log.arrivals.into_iter().map(|(time, _)| (time, i)));
        }
        for r in &records {
            self.trace.occupancy[r.vertex] += r.share * (r.exit - r.enter);
        }
        if self.opts.record_arrivals {
            arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            self.trace
                .events
                .extend(arrivals.into_iter().map(|(time, a)| Event {
                    time,
                    kind: EventKind::Arrival,
                    agent: Some(a),
                }));
        }
        for c in detect_collision(&records) {
            self.trace.collisions.push(c);
            let detail = format!(
                "agents {} and {} both at vertex {}",
                c.agents.0, c.agents.1, c.vertex
            );
            self.violate(c.time, CheckKind::Collision, detail)?;
        }
        Ok(())
    }

    fn on_switch(&mut self, t: f64) {
        self.segment = self.phi.segment_index_at(t);
        self.trace.events.push(Event {
            time: t,
            kind: EventKind::LikelihoodSwitch,
            agent: None,
        });
        let cost = coverage_cost(&self.state, self.g, self.params, self.phi, t);
        self.trace.cost_samples.push(CostSample {
            time: t,
            cost,
            segment: self.segment,
        });
        self.prev_cost = Some(cost);
        self.conv = Convergence {
            segment: self.segment,
            last_change: t,
            confirmed: vec![false; self.params.agent_count()],
            reported: false,
        };
    }

    fn on_comm(&mut self, i: usize, t: f64) -> Result<(), SimError> {
        self.trace.events.push(Event {
            time: t,
            kind: EventKind::Comm,
            agent: Some(i),
        });
        self.check_protocol(i, t)?;
        let out = match base_update(&mut self.state, self.g, self.params, self.phi, i, t) {
            Ok(out) => out,
            Err(e @ CoverageError::IllPosed { .. }) => {
                let detail = e.to_string();
                self.violate(t, CheckKind::WellPosedness, detail.clone())?;
                return Err(SimError::Violation {
                    time: t,
                    check: CheckKind::WellPosedness,
                    detail,
                });
            }
            Err(e) => return Err(e.into()),
        };
        if out.branch == UpdateBranch::Search {
            self.gate_seen[i] = false;
        }
        let before = (self.motions[i].mode, self.motions[i].retreat_path.clone());
        match on_communication(
            self.g,
            &mut self.motions[i],
            &out.old_region,
            &out.payload,
            t,
        ) {
            Ok(()) => {}
            // only reachable when an unchecked planner left its region; route
            // it home through the whole graph so the run can go on
            Err(MotionError::NoRetreatPath { vertex, .. })
                if !self.opts.enforce_planner_contract =>
            {
                self.violate(
                    t,
                    CheckKind::Position,
                    format!("agent {i} at vertex {vertex} is outside its old region"),
                )?;
                let path = self.g.shortest_path_in_subset(
                    &self.g.all_vertices(),
                    vertex,
                    &out.payload.region,
                )?;
                let m = &mut self.motions[i];
                m.mode = MotionMode::Retreat;
                m.retreat_path = path;
            }
            Err(e) => return Err(e.into()),
        }
        let m = &self.motions[i];
        if m.mode == MotionMode::Retreat
            && (before.0 != MotionMode::Retreat || before.1 != m.retreat_path)
        {
            self.check_retreat(i, t, &out)?;
        }
        self.check_costs(t)?;
        self.track_convergence(i, t, &out)
    }

    fn check_protocol(&mut self, i: usize, t: f64) -> Result<(), SimError> {
        let own_gap = t - self.last_comm[i];
        if own_gap > self.params.delta_bar + TIME_SLACK {
            self.violate(
                t,
                CheckKind::Protocol,
                format!("agent {i} went {own_gap} without an exchange"),
            )?;
        }
        let gap = t - self.last_global_comm;
        if gap < self.params.delta_lower - TIME_SLACK {
            self.violate(
                t,
                CheckKind::Protocol,
                format!("exchanges only {gap} apart"),
            )?;
        }
        self.last_comm[i] = t;
        self.last_global_comm = t;
        Ok(())
    }

    fn check_costs(&mut self, t: f64) -> Result<(), SimError> {
        let cost = coverage_cost(&self.state, self.g, self.params, self.phi, t);
        let masses = self.phi.masses_at(t);
        let id_cost = covering_cost(
            self.g,
            &self.params.speeds,
            &self.state.id_partition(),
            &self.state.generators,
            masses,
        );
        let gap = (id_cost - cost).abs();
        let gap = if gap.is_nan() { f64::INFINITY } else { gap };
        if id_cost != cost {
            self.trace.max_cost_identity_gap = self.trace.max_cost_identity_gap.max(gap);
        }
        if gap > COST_TOLERANCE * cost.abs().max(1.0) && id_cost != cost {
            self.violate(
                t,
                CheckKind::CostIdentity,
                format!("cost of owner labels {id_cost} but of covering {cost}"),
            )?;
        }
        self.trace.cost_samples.push(CostSample {
            time: t,
            cost,
            segment: self.segment,
        });
        if let Some(prev) = self.prev_cost {
            if cost > prev + COST_TOLERANCE * prev.abs().max(1.0) {
                self.violate(
                    t,
                    CheckKind::CostIncrease,
                    format!("cost rose from {prev} to {cost}"),
                )?;
            }
        }
        self.prev_cost = Some(cost);
        Ok(())
    }

    /// A fresh retreat must finish within the vacate bound and only cross
    /// vertices their new owner cannot enter before it finishes.
    fn check_retreat(&mut self, i: usize, t: f64, out: &UpdateOutcome) -> Result<(), SimError> {
        let motion = &self.motions[i];
        let speed = motion.speed;
        let here = motion.settled_vertex();
        let remaining = motion.transit().map_or(0.0, |tr| tr.arrive - t);
        let path = motion.retreat_path.clone();
        let length = self.g.path_length(&path).unwrap_or(f64::INFINITY);
        let finish = t + remaining + length / speed;
        let core: Vec<usize> = out.old_id_region.iter().collect();
        let to_core = self.g.raw_distances_within(&out.old_region, &core)[here];
        let bound = t + remaining + to_core / speed;
        self.trace.retreats.push(RetreatRecord {
            agent: i,
            time: t,
            path: path.clone(),
            finish,
            bound,
        });
        if finish > bound + TIME_SLACK {
            self.violate(
                t,
                CheckKind::RetreatDuration,
                format!("agent {i} retreat ends at {finish}, bound {bound}"),
            )?;
        }
        for &v in &path[..path.len().saturating_sub(1)] {
            let owner = self.state.identifier[v];
            let reason = if owner == i {
                Some("still labelled with the retreating agent".to_string())
            } else if !self.state.agents[owner].recently_added.contains(v) {
                Some(format!("not held back by owner {owner}"))
            } else if self.state.agents[owner].omega + self.state.agents[owner].tau
                < finish - TIME_SLACK
            {
                Some(format!("owner {owner} may enter before the retreat ends"))
            } else {
                (0..self.state.agent_count())
                    .find(|&j| j != i && j != owner && self.state.covering[j].contains(v))
                    .map(|j| format!("also in the region of agent {j}"))
            };
            if let Some(reason) = reason {
                self.violate(
                    t,
                    CheckKind::RetreatSafety,
                    format!("agent {i} retreat through vertex {v}: {reason}"),
                )?;
            }
        }
        Ok(())
    }

    fn track_convergence(&mut self, i: usize, t: f64, out: &UpdateOutcome) -> Result<(), SimError> {
        let settled = self.state.covering_matches_ids();
        if out.changed {
            if self.conv.reported {
                let detail = format!(
                    "agent {i} changed the covering after convergence at segment {}",
                    self.conv.segment
                );
                self.violate(t, CheckKind::ConvergenceLost, detail)?;
            }
            self.conv.last_change = t;
        }
        if out.changed || !settled {
            self.conv.confirmed.iter_mut().for_each(|c| *c = false);
            return Ok(());
        }
        if out.branch == UpdateBranch::Search && !out.blocked {
            self.conv.confirmed[i] = true;
        }
        if !self.conv.reported && self.conv.confirmed.iter().all(|&c| c) {
            self.conv.reported = true;
            self.trace.convergence.push(ConvergenceReport {
                segment: self.conv.segment,
                static_since: self.conv.last_change,
                detected_at: t,
            });
            self.trace.events.push(Event {
                time: t,
                kind: EventKind::Convergence,
                agent: None,
            });
            let cert = pareto_certificate(
                &self.state,
                self.g,
                self.params,
                self.phi,
                t,
                ParetoMode::Local,
            )?;
            if let Some(w) = cert.witness {
                self.violate(t, CheckKind::ParetoLocal, format!("{w:?}"))?;
            }
        }
        Ok(())
    }

    fn record_timed_outputs(&mut self, t: f64) {
        while self.checkpoints.first().is_some_and(|&c| c <= t) {
            let time = self.checkpoints.remove(0);
            self.trace.checkpoints.push(OccupancyCheckpoint {
                time,
                occupancy: self.trace.occupancy.clone(),
            });
        }
        while self.snapshot_times.first().is_some_and(|&s| s <= t) {
            let time = self.snapshot_times.remove(0);
            self.trace.snapshots.push(self.state.snapshot(time));
        }
    }

    fn active_union(&self, t: f64) -> VertexSet {
        let mut covered = VertexSet::empty(self.g.vertex_count());
        for a in &self.state.agents {
            covered.union_with(&a.timing_view().active_region(t));
        }
        covered
    }

    /// Checks run once everything scheduled at `t` has happened.
    fn after_boundary(&mut self, t: f64) -> Result<(), SimError> {
        for v in check_state_invariants(&self.state, self.g, t) {
            let detail = v.to_string();
            self.report(RuntimeViolation {
                time: t,
                check: CheckKind::StateInvariant,
                clause: Some(v.clause),
                detail,
            })?;
        }

        let covered = self.active_union(t);
        for k in 0..self.g.vertex_count() {
            match (covered.contains(k), self.uncovered_since[k]) {
                (false, None) => self.uncovered_since[k] = Some(t),
                (true, Some(start)) => {
                    self.uncovered_since[k] = None;
                    self.close_interval(k, start, t)?;
                }
                _ => {}
            }
        }

        for i in 0..self.state.agent_count() {
            let a = &self.state.agents[i];
            let gate = a.omega + a.tau;
            if !self.gate_seen[i] && t >= gate {
                self.gate_seen[i] = true;
                let vertices = a.recently_added.intersection(&a.region);
                if !vertices.is_empty() {
                    self.protections.push(Protection {
                        agent: i,
                        until: gate + self.params.delta_h,
                        vertices,
                    });
                }
            }
        }
        self.protections.retain(|p| t < p.until - TIME_SLACK);
        let mut lost = Vec::new();
        for p in &self.protections {
            if let Some(k) = p.vertices.iter().find(|&k| !covered.contains(k)) {
                lost.push(format!(
                    "vertex {k} released by agent {} uncovered before {}",
                    p.agent, p.until
                ));
            }
        }
        for detail in lost {
            self.violate(t, CheckKind::HoldProtection, detail)?;
        }

        for i in 0..self.motions.len() {
            let m = &self.motions[i];
            let here = m.settled_vertex();
            let view = &self.state.agents[i];
            let ok = match m.mode {
                MotionMode::Normal => view.timing_view().is_active(here, t),
                MotionMode::Retreat => view.region.contains(here) || m.retreat_path.contains(&here),
            };
            if !ok {
                let detail = format!(
                    "agent {i} ({:?}) at vertex {here} outside its allowed area",
                    m.mode
                );
                self.violate(t, CheckKind::Position, detail)?;
            }
        }
        Ok(())
    }

    fn close_interval(&mut self, vertex: usize, start: f64, end: f64) -> Result<(), SimError> {
        let interval = UncoveredInterval { vertex, start, end };
        self.trace.uncovered[vertex].push(interval);
        let bound = self.prep.uncovered_bound();
        if interval.length() >= bound {
            self.violate(
                end,
                CheckKind::UncoveredBound,
                format!("vertex {vertex} uncovered for {}", interval.length()),
            )?;
        }
        Ok(())
    }

    fn close_uncovered(&mut self, end: f64) -> Result<(), SimError> {
        for k in 0..self.uncovered_since.len() {
            if let Some(start) = self.uncovered_since[k].take() {
                if end > start {
                    self.close_interval(k, start, end)?;
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> SimTrace {
        self.trace.final_state = self.state;
        self.trace
    }
}
