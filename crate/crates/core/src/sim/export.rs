use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::metrics::Metrics;
use super::trace::SimTrace;
use super::SimError;
use crate::coverage::StateSnapshot;

/// Version stamped into the first line of every CSV file.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// The four plot-data tables of a run, rendered as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTables {
    pub cost: String,
    pub uncovered: String,
    pub occupancy: String,
    pub events: String,
}

fn header(name: &str, columns: &str) -> String {
    format!("# schema coverops/{name} v{CSV_SCHEMA_VERSION}\n{columns}\n")
}

impl CsvTables {
    pub fn render(trace: &SimTrace, metrics: &Metrics) -> Self {
        let mut cost = header("cost", "time,cost,segment");
        for s in &trace.cost_samples {
            let _ = writeln!(cost, "{},{},{}", s.time, s.cost, s.segment);
        }
        let mut uncovered = header("uncovered", "vertex,max_gap,intervals");
        for (v, gap) in metrics.max_uncovered_per_vertex.iter().enumerate() {
            let _ = writeln!(uncovered, "{v},{gap},{}", trace.uncovered[v].len());
        }
        let mut occupancy = header("occupancy", "vertex,fraction");
        for (v, f) in metrics.occupancy_distribution.iter().enumerate() {
            let _ = writeln!(occupancy, "{v},{f}");
        }
        let mut events = header("events", "time,kind,agent");
        for e in &trace.events {
            let agent = e.agent.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(events, "{},{},{agent}", e.time, e.kind.as_str());
        }
        Self {
            cost,
            uncovered,
            occupancy,
            events,
        }
    }

    pub fn files(&self) -> [(&'static str, &str); 4] {
        [
            ("cost.csv", &self.cost),
            ("uncovered.csv", &self.uncovered),
            ("occupancy.csv", &self.occupancy),
            ("events.csv", &self.events),
        ]
    }
}

fn write(path: &Path, contents: &str) -> Result<(), SimError> {
    fs::write(path, contents).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the CSV tables, `snapshots.json` (requested snapshots followed by
/// the final state) and `metrics.json` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, trace: &SimTrace, metrics: &Metrics) -> Result<(), SimError> {
    fs::create_dir_all(dir).map_err(|source| SimError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, text) in CsvTables::render(trace, metrics).files() {
        write(&dir.join(name), text)?;
    }
    let mut snapshots: Vec<StateSnapshot> = trace.snapshots.clone();
    snapshots.push(trace.final_state.snapshot(trace.duration));
    write(
        &dir.join("snapshots.json"),
        &serde_json::to_string_pretty(&snapshots).expect("snapshots serialize"),
    )?;
    write(
        &dir.join("metrics.json"),
        &serde_json::to_string_pretty(metrics).expect("metrics serialize"),
    )?;
    Ok(())
}
