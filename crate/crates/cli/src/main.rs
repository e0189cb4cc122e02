use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use coverops::checks::{run_suite, Suite, SuiteOptions};
use coverops::sim::{
    compute_metrics, run_batch, run_prepared, write_outputs, Metrics, PreparedConfig, SimConfig,
    SimError, SimOptions, SimTrace,
};

/// Asynchronous coverage partitioning simulator.
#[derive(Debug, Parser)]
#[command(name = "coverops", version)]
struct Cli {
    /// Worker threads for batches and check suites.
    #[arg(long, env = "COVEROPS_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a configuration and run every validity check on it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one simulation or a batch and write plot data.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of runs; run `k` uses seed `seed + k`.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        batch: u64,
        /// Overrides the configuration seed (the batch seed base).
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated occupancy checkpoint times; overrides the configuration.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<f64>>,
    },
    /// Run a property suite and print a pass/fail report.
    Check {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of cases; defaults to the suite's standard size.
        #[arg(long)]
        cases: Option<usize>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the command ran but found a violation.
fn dispatch(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run {
            config,
            out,
            batch,
            seed,
            checkpoints,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(c) = checkpoints {
                cfg.checkpoints = c;
            }
            if batch == 1 {
                run_single(&cfg, &out)
            } else {
                run_many(&cfg, &out, batch as usize)
            }
        }
        Command::Check { suite, seed, cases } => {
            let opts = SuiteOptions {
                seed,
                cases: cases.unwrap_or_else(|| suite.default_cases()),
            };
            let report = run_suite(suite, &opts);
            println!("{report}");
            Ok(report.passed())
        }
    }
}

fn load(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SimConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn prepare(cfg: &SimConfig) -> Result<PreparedConfig> {
    cfg.prepare().context("configuration rejected")
}

fn validate(path: &Path) -> Result<bool> {
    let prep = prepare(&load(path)?)?;
    let p = prep.params();
    println!("ok: {}", path.display());
    println!("  vertices: {}", prep.graph.vertex_count());
    println!("  agents: {}", p.agent_count());
    println!("  generators: {:?}", prep.generators);
    println!("  diameter bound: {}", prep.diameter_bound);
    println!("  uncovered bound: {}", prep.uncovered_bound());
    if p.speeds.iter().any(|&s| s != p.speeds[0]) {
        println!(
            "  warning: agents have different speeds; a slower agent claiming vertices can split a \
             neighbour's owner region, which the run reports as a well-posedness violation"
        );
    }
    Ok(true)
}

fn summary_line(seed: u64, trace: &SimTrace, m: &Metrics, bound: f64) -> String {
    let converged = m
        .converged_at
        .map_or("no".to_string(), |t| format!("yes at t={t}"));
    format!(
        "seed {seed}: converged {converged}; max uncovered {} (bound {bound}); collisions {}; \
         violations {}; exchanges {}",
        m.max_uncovered,
        trace.collisions.len(),
        trace.violations.len(),
        m.comm_count
    )
}

fn run_single(cfg: &SimConfig, out: &Path) -> Result<bool> {
    let prep = prepare(cfg)?;
    let trace = match run_prepared(&prep, &SimOptions::default()) {
        Ok(t) => t,
        Err(e @ SimError::Violation { .. }) => {
            eprintln!("run aborted: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e).context("simulation failed"),
    };
    let metrics = compute_metrics(&trace, &prep.phi);
    write_outputs(out, &trace, &metrics)?;
    println!(
        "{}",
        summary_line(cfg.seed, &trace, &metrics, prep.uncovered_bound())
    );
    println!("outputs written to {}", out.display());
    Ok(trace.is_clean())
}

fn run_many(cfg: &SimConfig, out: &Path, count: usize) -> Result<bool> {
    let prep = prepare(cfg)?;
    let bound = prep.uncovered_bound();
    let items = run_batch(cfg, count, cfg.seed, &SimOptions::default());
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut table = String::from(
        "# schema coverops/batch v1\nseed,status,max_uncovered,converged_at,collisions,violations,exchanges\n",
    );
    let mut clean = true;
    for item in items {
        let dir = out.join(format!("seed-{}", item.seed));
        match item.result {
            Ok(trace) => {
                let mut run_cfg = cfg.clone();
                run_cfg.seed = item.seed;
                let phi = &prepare(&run_cfg)?.phi;
                let m = compute_metrics(&trace, phi);
                write_outputs(&dir, &trace, &m)?;
                println!("{}", summary_line(item.seed, &trace, &m, bound));
                clean &= trace.is_clean();
                table.push_str(&format!(
                    "{},ok,{},{},{},{},{}\n",
                    item.seed,
                    m.max_uncovered,
                    m.converged_at.map(|t| t.to_string()).unwrap_or_default(),
                    trace.collisions.len(),
                    trace.violations.len(),
                    m.comm_count
                ));
            }
            Err(e) => {
                clean = false;
                eprintln!("seed {}: {e}", item.seed);
                table.push_str(&format!("{},error,,,,,\n", item.seed));
                if !matches!(e, SimError::Violation { .. }) {
                    bail!("seed {}: {e}", item.seed);
                }
            }
        }
    }
    let path = out.join("batch.csv");
    fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
    println!("batch of {count} written to {}", out.display());
    Ok(clean)
}
