//! The collision detector and the planner contract, exercised with planners
//! that deliberately ignore the motion protocol.

use coverops::agent::{Move, Planner, PlannerContext};
use coverops::checks::invariants_config;
use coverops::sim::{detect_collision, run_with_planners, CheckKind, SimError, SimOptions};
use coverops::VertexId;

/// Walks toward a fixed vertex no matter whose region it crosses.
struct Homing {
    target: VertexId,
}

impl Planner for Homing {
    fn name(&self) -> &str {
        "homing"
    }

    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move {
        let here = ctx.motion.current_vertex;
        if here == self.target {
            return Move::Stay;
        }
        let all = ctx.graph.all_vertices();
        let d = ctx.graph.distances_within(&all, self.target).unwrap();
        ctx.graph
            .neighbors(here)
            .iter()
            .map(|&(nb, _)| nb)
            .min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)))
            .map_or(Move::Stay, Move::To)
    }
}

fn homing_planners(m: usize) -> Vec<Box<dyn Planner>> {
    (0..m)
        .map(|_| Box::new(Homing { target: 0 }) as Box<dyn Planner>)
        .collect()
}

#[test]
fn protocol_breaking_planners_collide() {
    let mut cfg = invariants_config(5);
    cfg.duration = 200.0;
    let prep = cfg.prepare().unwrap();
    let opts = SimOptions {
        abort_on_violation: false,
        enforce_planner_contract: false,
        record_arrivals: false,
    };
    let trace = run_with_planners(&prep, &opts, homing_planners(4)).unwrap();
    assert!(
        !trace.collisions.is_empty(),
        "detector missed agents meeting at the target"
    );
    assert!(trace.collisions.iter().any(|c| c.vertex == 0));
    assert!(trace
        .violations
        .iter()
        .any(|v| v.check == CheckKind::Collision));
}

#[test]
fn collision_aborts_the_run_by_default() {
    let mut cfg = invariants_config(5);
    cfg.duration = 200.0;
    let prep = cfg.prepare().unwrap();
    let opts = SimOptions {
        enforce_planner_contract: false,
        ..SimOptions::default()
    };
    let err = run_with_planners(&prep, &opts, homing_planners(4)).unwrap_err();
    assert!(matches!(err, SimError::Violation { .. }), "{err}");
}

#[test]
fn contract_enforcement_rejects_the_planner_first() {
    let mut cfg = invariants_config(5);
    cfg.duration = 200.0;
    let prep = cfg.prepare().unwrap();
    let err = run_with_planners(&prep, &SimOptions::default(), homing_planners(4)).unwrap_err();
    assert!(matches!(err, SimError::Motion(_)), "{err}");
}

#[test]
fn conforming_run_produces_occupancy_without_overlap() {
    let mut cfg = invariants_config(9);
    cfg.duration = 300.0;
    let trace = coverops::sim::run(&cfg).unwrap();
    assert!(trace.collisions.is_empty());
    let total: f64 = trace.occupancy.iter().sum();
    // every agent is somewhere at every instant
    assert!((total - 4.0 * 300.0).abs() < 1e-6, "{total}");
    assert!(detect_collision(&[]).is_empty());
}
