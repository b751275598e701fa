use std::path::Path;
use std::process::{Command, Output};

use rendezvous::io::parse_csv;

const BIN: &str = env!("CARGO_BIN_EXE_rendezvous");

/// Short descent from 5 m over 200 m so that full solves finish quickly.
const SMALL: &str = r#"{"scenario": "straight", "spec": {"z0": -5, "s_f": 200, "t0": 2}}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("RENDEZVOUS_NUM_THREADS")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    std::fs::write(&path, SMALL).unwrap();
    format!("file:{}", path.display())
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn predict_prints_closed_form_table() {
    let o = run(&["predict", "--k-aggr", "0,0.5,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<Vec<f64>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!((rows[0][3] - 126.5).abs() < 0.05);
    assert!((rows[0][2] - 2000.0).abs() < 0.5);
    assert!((rows[2][3] - 40.31).abs() < 0.05);
    // s_r = z0 / sin(gamma_d)
    let oracle = -50.0 / rows[1][1].to_radians().sin();
    assert!((rows[1][2] - oracle).abs() < 0.01, "{} vs {oracle}", rows[1][2]);
}

#[test]
fn out_of_range_aggressiveness_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&["solve", "--k-aggr", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k_aggr out of [0,1]"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn bad_scenarios_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    for s in ["loop", "file:/nonexistent/config.json"] {
        let o = run(&["solve", "--scenario", s, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{s}");
        assert!(stderr(&o).starts_with("error:"));
    }
}

#[test]
fn solve_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let o = run(&["solve", "--scenario", &cfg, "--k-aggr", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));

    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 11);
    for f in files {
        assert!(out.join(f.as_str().unwrap()).is_file(), "{f}");
    }
    assert_eq!(manifest["timestamp"], 1700000000);
    assert_eq!(manifest["summary"]["status"], "converged");

    // rendezvous time recomputed from the trajectory file
    let table = parse_csv(&read(&out.join("trajectory.csv"))).unwrap();
    let t = table.column("t").unwrap();
    let ez = table.column("e_z").unwrap();
    let t0 = manifest["scenario"]["spec"]["t0"].as_f64().unwrap();
    let first = t.iter().zip(&ez).find(|(t, e)| **t > t0 && -**e <= 0.1).map(|(t, _)| t - t0).unwrap();
    assert_eq!(manifest["summary"]["rendezvous_time"].as_f64().unwrap(), first);

    let report: serde_json::Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    assert_eq!(report["iterations"], manifest["summary"]["iterations"]);
    assert_eq!(report["final_cost"], manifest["summary"]["final_cost"]);
}

#[test]
fn repeated_solves_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["solve", "--scenario", &cfg, "--k-aggr", "1", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(&a.join("manifest.json"))).unwrap();
    for f in manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).chain(["manifest.json"]) {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let o = run(&["solve", "--scenario", &cfg, "--max-newton", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn single_value_sweep_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let solo = dir.path().join("solo");
    let sweep = dir.path().join("sweep");
    let o = run(&["solve", "--scenario", &cfg, "--k-aggr", "0.25", "--out", solo.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(BIN)
        .args(["sweep", "--scenario", &cfg, "--k-aggr", "0.25", "--out", sweep.to_str().unwrap()])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env("RENDEZVOUS_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trajectory.csv", "report.json", "manifest.json", "plots/u1.csv"] {
        assert_eq!(read(&solo.join(f)), read(&sweep.join("k_0.25").join(f)), "{f}");
    }
    let summary = parse_csv(&read(&sweep.join("sweep_summary.csv"))).unwrap();
    assert_eq!(
        summary.columns,
        ["k[-]", "T_pred[s]", "T_achieved[s]", "iterations[-]", "worst_residual[-]"]
    );
    let manifest: serde_json::Value = serde_json::from_str(&read(&solo.join("manifest.json"))).unwrap();
    assert_eq!(summary.rows[0][0], 0.25);
    assert_eq!(summary.rows[0][2], manifest["summary"]["rendezvous_time"].as_f64().unwrap());
    assert_eq!(summary.rows[0][3], manifest["summary"]["iterations"].as_f64().unwrap());
}

#[test]
fn sweep_runs_each_value_in_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "--scenario", &cfg, "--k-aggr", "0,1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = parse_csv(&read(&out.join("sweep_summary.csv"))).unwrap();
    let k = summary.column("k").unwrap();
    let t = summary.column("T_achieved").unwrap();
    assert_eq!(k, [0.0, 1.0]);
    assert!(t[1] < t[0]);
    assert!(out.join("k_0/trajectory.csv").is_file() && out.join("k_1/trajectory.csv").is_file());
}

#[test]
fn invalid_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep");
    let o = Command::new(BIN)
        .args(["sweep", "--scenario", &cfg, "--k-aggr", "0", "--out", out.to_str().unwrap()])
        .env("RENDEZVOUS_NUM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("RENDEZVOUS_NUM_THREADS"));
}

#[test]
fn validate_passes_by_default_and_fails_when_tightened() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("validate.json");
    let o = run(&["validate", "--out", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    let results: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    assert!(results.as_array().unwrap().iter().all(|r| r["passed"] == true));

    let o = run(&["validate", "--fd-tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("linearization"), "{}", stderr(&o));
}
