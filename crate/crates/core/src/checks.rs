//! Runnable property suites: seeded simulation sweeps, the additive-subset
//! enumeration oracle, and exhaustive optimality checks on tiny instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::PlannerKind;
use crate::coverage::{
    additive_subset, coverage_cost, pareto_certificate, Clause, CoverageError, MissionParams,
    ParetoCertificate, ParetoMode,
};
use crate::likelihood::{
    GaussianSpec, LikelihoodMode, LikelihoodSchedule, LikelihoodSpec, SegmentSpec,
};
use crate::oracle::{
    brute_additive_subset, brute_cost, random_additive_instance, random_connected_graph,
};
use crate::sim::{
    run_prepared, CheckKind, GraphSpec, GridSpec, RuntimeViolation, SimConfig, SimError,
    SimOptions, SimTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Seeded simulation runs with every runtime check switched on.
    Invariants,
    /// Constructive additive subsets against brute-force enumeration.
    Oracle,
    /// Tiny runs checked exhaustively for optimality after convergence.
    Pareto,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Invariants, Suite::Oracle, Suite::Pareto];

    pub fn default_cases(self) -> usize {
        match self {
            Suite::Invariants => 100,
            Suite::Oracle => 500,
            Suite::Pareto => 40,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Invariants => "invariants",
            Suite::Oracle => "oracle",
            Suite::Pareto => "pareto",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected invariants, oracle or pareto)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} ({} cases)", self.suite, self.cases)?;
        for l in &self.lines {
            writeln!(
                f,
                "  [{}] {}: {}",
                if l.passed { "PASS" } else { "FAIL" },
                l.name,
                l.detail
            )?;
        }
        write!(
            f,
            "suite {}: {}",
            self.suite,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub cases: usize,
}

impl SuiteOptions {
    pub fn defaults(suite: Suite) -> Self {
        Self {
            seed: 0,
            cases: suite.default_cases(),
        }
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> SuiteReport {
    let lines = match suite {
        Suite::Invariants => invariants_suite(opts),
        Suite::Oracle => oracle_suite(opts),
        Suite::Pareto => pareto_suite(opts),
    };
    SuiteReport {
        suite,
        cases: opts.cases,
        lines,
    }
}

/// 4 agents on a 10×10 unit grid, static likelihood, 2000 time units.
pub fn invariants_config(seed: u64) -> SimConfig {
    SimConfig {
        graph: GraphSpec::Grid(GridSpec {
            rows: 10,
            cols: 10,
            cell_size: 1.0,
            weight_mode: Default::default(),
        }),
        mission: MissionParams {
            speeds: vec![1.0; 4],
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 2.0,
        },
        generators: None,
        likelihood: LikelihoodSpec::Gaussian(GaussianSpec {
            center: [2.0, 3.0],
            sigma: 3.0,
        }),
        planner: PlannerKind::GreedyErgodic,
        duration: 2000.0,
        seed,
        likelihood_mode: LikelihoodMode::Instantaneous,
        checkpoints: vec![],
        snapshot_times: vec![],
    }
}

/// Two equal-speed agents on a random connected graph of at most 8
/// vertices with a random static likelihood.
pub fn tiny_pareto_config(seed: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061_7265_746f);
    let n = rng.gen_range(4..=8);
    let extra = rng.gen_range(0..=n);
    let g = random_connected_graph(&mut rng, n, extra, 3);
    let raw: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0u32..=4))).collect();
    let total: f64 = raw.iter().sum();
    let masses = if total > 0.0 {
        raw.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    SimConfig {
        graph: GraphSpec::Explicit(g.to_document()),
        mission: MissionParams {
            speeds: vec![1.0; 2],
            delta_bar: 10.0,
            delta_lower: 1.0,
            delta_h: 2.0,
        },
        generators: None,
        likelihood: LikelihoodSpec::Schedule {
            segments: vec![SegmentSpec {
                t: 0.0,
                masses: Some(masses),
                gaussian: None,
            }],
        },
        planner: PlannerKind::RandomAdmissible,
        duration: 400.0,
        seed,
        likelihood_mode: LikelihoodMode::Instantaneous,
        checkpoints: vec![],
        snapshot_times: vec![],
    }
}

fn line(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckLine {
    CheckLine {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn run_recording(config: &SimConfig) -> Result<SimTrace, SimError> {
    let prep = config.prepare()?;
    run_prepared(
        &prep,
        &SimOptions {
            abort_on_violation: false,
            ..SimOptions::default()
        },
    )
}

fn invariants_suite(opts: &SuiteOptions) -> Vec<CheckLine> {
    let results: Vec<(u64, Result<SimTrace, SimError>)> = (0..opts.cases)
        .into_par_iter()
        .map(|idx| {
            let seed = opts.seed.wrapping_add(idx as u64);
            (seed, run_recording(&invariants_config(seed)))
        })
        .collect();
    let traces: Vec<(u64, &SimTrace)> = results
        .iter()
        .filter_map(|(s, r)| r.as_ref().ok().map(|t| (*s, t)))
        .collect();
    let failed_runs: Vec<String> = results
        .iter()
        .filter_map(|(s, r)| r.as_ref().err().map(|e| format!("seed {s}: {e}")))
        .collect();

    let mut lines = vec![line(
        "runs complete",
        failed_runs.is_empty(),
        if failed_runs.is_empty() {
            format!("{} runs", traces.len())
        } else {
            failed_runs.join("; ")
        },
    )];
    let first_hit = |pred: &dyn Fn(&RuntimeViolation) -> bool| {
        let mut count = 0;
        let mut first = None;
        for (seed, tr) in &traces {
            for v in tr.violations.iter().filter(|v| pred(v)) {
                count += 1;
                first.get_or_insert_with(|| format!("seed {seed}: {v}"));
            }
        }
        (count, first)
    };
    let mut summarize = |name: String, (count, first): (usize, Option<String>)| {
        let detail = match first {
            None => "0 violations".to_string(),
            Some(f) => format!("{count} violations, first {f}"),
        };
        lines.push(line(name, count == 0, detail));
    };
    for clause in Clause::ALL {
        summarize(
            clause.description().to_string(),
            first_hit(&|v| v.clause == Some(clause)),
        );
    }
    for check in CheckKind::ALL
        .into_iter()
        .filter(|&c| c != CheckKind::StateInvariant)
    {
        summarize(
            format!("runtime check {check}"),
            first_hit(&|v| v.check == check),
        );
    }
    let unconverged: Vec<u64> = traces
        .iter()
        .filter(|(_, t)| t.convergence.is_empty())
        .map(|(s, _)| *s)
        .collect();
    lines.push(line(
        "every run converges",
        unconverged.is_empty(),
        if unconverged.is_empty() {
            "all runs".to_string()
        } else {
            format!("no convergence for seeds {unconverged:?}")
        },
    ));
    lines
}

fn oracle_suite(opts: &SuiteOptions) -> Vec<CheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut comparisons = 0;
    let mut mismatch = None;
    let mut ambiguous = None;
    let mut cost_gap = None;
    let mut errors = None;
    for case in 0..opts.cases {
        let inst = random_additive_instance(&mut rng, 10);
        let s = &inst.state;
        let masses: Vec<f64> = {
            let n = inst.graph.vertex_count();
            vec![1.0 / n as f64; n]
        };
        let fast = coverage_cost(
            s,
            &inst.graph,
            &inst.params,
            &LikelihoodSchedule::uniform(masses.len()),
            0.0,
        );
        let slow = brute_cost(
            &inst.graph,
            &inst.params.speeds,
            &s.covering,
            &s.generators,
            &masses,
        );
        if (fast - slow).abs() > 1e-12 * slow.abs().max(1.0)
            && !(fast.is_infinite() && slow.is_infinite())
        {
            cost_gap.get_or_insert(format!("case {case}: {fast} vs {slow}"));
        }
        for k in s.id_region(inst.agent).iter() {
            comparisons += 1;
            let brute =
                brute_additive_subset(s, &inst.graph, &inst.params, inst.agent, k, inst.time);
            if !brute.unique {
                ambiguous.get_or_insert(format!("case {case}, generator {k}"));
            }
            match additive_subset(s, &inst.graph, &inst.params, inst.agent, k, inst.time) {
                Ok(got) if got.set == brute.set => {}
                Ok(got) => {
                    mismatch.get_or_insert(format!(
                        "case {case}, generator {k}: got {:?}, expected {:?}",
                        got.set.to_vec(),
                        brute.set.to_vec()
                    ));
                }
                Err(e) => {
                    errors.get_or_insert(format!("case {case}, generator {k}: {e}"));
                }
            }
        }
    }
    let report = |name: &str, first: Option<String>, ok: String| {
        line(name, first.is_none(), first.unwrap_or(ok))
    };
    vec![
        report(
            "additive subset is well posed",
            errors,
            format!("{} instances", opts.cases),
        ),
        report(
            "additive subset equals enumeration",
            mismatch,
            format!("{comparisons} generator choices"),
        ),
        report(
            "largest valid set contains every valid set",
            ambiguous,
            format!("{comparisons} generator choices"),
        ),
        report(
            "coverage cost equals all-pairs sum",
            cost_gap,
            format!("{} instances", opts.cases),
        ),
    ]
}

fn pareto_suite(opts: &SuiteOptions) -> Vec<CheckLine> {
    struct Outcome {
        seed: u64,
        run: Result<(), String>,
        converged: bool,
        local: Option<String>,
        exhaustive: Option<String>,
    }
    let outcomes: Vec<Outcome> = (0..opts.cases)
        .into_par_iter()
        .map(|idx| {
            let seed = opts.seed.wrapping_add(idx as u64);
            let cfg = tiny_pareto_config(seed);
            let mut out = Outcome {
                seed,
                run: Ok(()),
                converged: false,
                local: None,
                exhaustive: None,
            };
            let prep = match cfg.prepare() {
                Ok(p) => p,
                Err(e) => {
                    out.run = Err(e.to_string());
                    return out;
                }
            };
            let trace = match run_prepared(
                &prep,
                &SimOptions {
                    abort_on_violation: false,
                    ..SimOptions::default()
                },
            ) {
                Ok(t) => t,
                Err(e) => {
                    out.run = Err(e.to_string());
                    return out;
                }
            };
            if let Some(v) = trace.violations.first() {
                out.run = Err(v.to_string());
            }
            out.converged = !trace.convergence.is_empty();
            if !out.converged {
                return out;
            }
            let state = &trace.final_state;
            let t = trace.duration;
            let describe = |r: Result<ParetoCertificate, CoverageError>| match r {
                Ok(c) => c.witness.map(|w| format!("{w:?}")),
                Err(e) => Some(e.to_string()),
            };
            out.local = describe(pareto_certificate(
                state,
                &prep.graph,
                prep.params(),
                &prep.phi,
                t,
                ParetoMode::Local,
            ));
            out.exhaustive = describe(pareto_certificate(
                state,
                &prep.graph,
                prep.params(),
                &prep.phi,
                t,
                ParetoMode::Exhaustive,
            ));
            out
        })
        .collect();
    let first = |f: &dyn Fn(&Outcome) -> Option<String>| {
        outcomes
            .iter()
            .find_map(|o| f(o).map(|d| format!("seed {}: {d}", o.seed)))
    };
    let ok = format!("{} instances", outcomes.len());
    let as_line = |name: &str, hit: Option<String>| {
        line(name, hit.is_none(), hit.unwrap_or_else(|| ok.clone()))
    };
    vec![
        as_line("tiny runs are clean", first(&|o| o.run.clone().err())),
        as_line(
            "tiny runs converge",
            first(&|o| (!o.converged).then(|| "no convergence".to_string())),
        ),
        as_line("local certificate holds", first(&|o| o.local.clone())),
        as_line(
            "no generator tuple or covering does better",
            first(&|o| o.exhaustive.clone()),
        ),
    ]
}
