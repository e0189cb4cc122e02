use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coverops"));
    cmd.env_remove("COVEROPS_THREADS");
    cmd
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A short copy of the small configuration.
fn short_config(dir: &Path, duration: f64) -> PathBuf {
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(config("small.json")).unwrap()).unwrap();
    doc["duration"] = duration.into();
    doc["checkpoints"] = serde_json::json!([duration / 2.0, duration]);
    let path = dir.join("short.json");
    fs::write(&path, doc.to_string()).unwrap();
    path
}

#[test]
fn validate_accepts_shipped_configs() {
    for name in ["baseline.json", "small.json", "switching.json"] {
        let out = bin()
            .args(["validate", "--config"])
            .arg(config(name))
            .output()
            .unwrap();
        assert!(out.status.success(), "{name}: {}", stderr(&out));
        let text = stdout(&out);
        assert!(text.starts_with("ok:"), "{text}");
        assert!(text.contains("uncovered bound"));
    }
    let out = bin()
        .args(["validate", "--config"])
        .arg(config("baseline.json"))
        .output()
        .unwrap();
    assert!(
        stdout(&out).contains("uncovered bound: 770"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn validate_rejects_duplicate_generators() {
    let out = bin()
        .args(["validate", "--config"])
        .arg(config("bad_generators.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error:"), "{}", stderr(&out));
}

#[test]
fn validate_reports_missing_file() {
    let out = bin()
        .args(["validate", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("/nonexistent/cfg.json"));
}

#[test]
fn run_writes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 300.0);
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = dir.path().join(tag);
        let out = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(
            stdout(&out).contains("seed 7: converged"),
            "{}",
            stdout(&out)
        );
        outputs.push(out_dir);
    }
    for name in [
        "cost.csv",
        "uncovered.csv",
        "occupancy.csv",
        "events.csv",
        "snapshots.json",
        "metrics.json",
    ] {
        let a = fs::read(outputs[0].join(name)).unwrap();
        let b = fs::read(outputs[1].join(name)).unwrap();
        assert!(!a.is_empty(), "{name} empty");
        assert_eq!(a, b, "{name} differs between runs");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(outputs[0].join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["collision_count"], 0);
}

#[test]
fn seed_and_checkpoint_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 200.0);
    let out_dir = dir.path().join("o");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seed", "11", "--checkpoints", "50,100"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("seed 11:"), "{}", stdout(&out));
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("metrics.json")).unwrap()).unwrap();
    let times: Vec<f64> = metrics["total_variation"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_f64().unwrap())
        .collect();
    assert_eq!(times, vec![50.0, 100.0]);
}

#[test]
fn batch_writes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 150.0);
    let out_dir = dir.path().join("batch");
    let out = bin()
        .args(["--threads", "2", "run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--batch", "3", "--seed", "40"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    for seed in 40..43 {
        assert!(out_dir.join(format!("seed-{seed}/cost.csv")).is_file());
    }
    let table = fs::read_to_string(out_dir.join("batch.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "# schema coverops/batch v1");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("40,ok,"));
}

#[test]
fn zero_batch_is_a_usage_error() {
    let out = bin()
        .args(["run", "--config"])
        .arg(config("small.json"))
        .args(["--out", "/tmp/unused", "--batch", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_oracle_prints_a_report() {
    let out = bin()
        .args(["check", "--suite", "oracle", "--cases", "15", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("[PASS]"));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn unknown_suite_is_rejected() {
    let out = bin()
        .args(["check", "--suite", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
