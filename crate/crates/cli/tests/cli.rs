use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use fairsched::harness::S0_JSON;

fn fairsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairsched"))
        .args(args)
        .output()
        .unwrap()
}

fn scenario_file(dir: &tempfile::TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("scenario.json");
    fs::write(&path, body).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_accepts_the_bundled_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(&dir, S0_JSON);
    let out = fairsched(&["validate", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("2 frameworks, 2 servers, 2 resources"));
}

#[test]
fn validate_reports_violations_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(&dir, &S0_JSON.replace("[5, 1]", "[-5, 1]"));
    let out = fairsched(&["validate", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative demand"));
}

#[test]
fn run_prints_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(&dir, S0_JSON);
    let out = fairsched(&["run", path.to_str().unwrap(), "--policy", "rPS-DSF", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("step,framework_id,server_id,criterion_value\n"));
    assert_eq!(text.lines().count(), 43);
}

#[test]
fn run_rejects_unknown_policies() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(&dir, S0_JSON);
    let out = fairsched(&["run", path.to_str().unwrap(), "--policy", "lottery"]);
    assert!(!out.status.success());
}

#[test]
fn montecarlo_prints_cell_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(&dir, S0_JSON);
    let out = fairsched(&[
        "montecarlo",
        path.to_str().unwrap(),
        "--policy",
        "PS-DSF",
        "--trials",
        "5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\nx_1_1,19,0,19,19\n"), "{text}");
    assert!(text.contains("\ntotal,41,0,41,41\n"));
    let too_few = fairsched(&["montecarlo", path.to_str().unwrap(), "--policy", "DRF", "--trials", "1"]);
    assert!(!too_few.status.success());
}

#[test]
fn oracle_prints_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(&dir, S0_JSON);
    let out = fairsched(&["oracle", path.to_str().unwrap(), "--mode", "pf", "--a", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let totals = v["totals"].as_array().unwrap();
    assert!((totals[0].as_f64().unwrap() - 65.0 / 3.0).abs() < 1e-6);
    for mode in ["mmf", "upf"] {
        let out = fairsched(&["oracle", path.to_str().unwrap(), "--mode", mode, "--criterion", "psdsf"]);
        assert!(out.status.success(), "{mode}");
    }
    let bad = fairsched(&["oracle", path.to_str().unwrap(), "--mode", "pf", "--a", "-1"]);
    assert!(!bad.status.success());
}

#[test]
fn reproduce_command_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = fairsched(&["repro-paper", out_dir.to_str().unwrap(), "--trials", "10"]);
    assert!(out.status.success());
    let mean = fs::read_to_string(out_dir.join("allocations-mean.csv")).unwrap();
    assert!(mean.contains("\nrPS-DSF,19,2,2,19,42\n"));
    let unused = fs::read_to_string(out_dir.join("unused-mean.csv")).unwrap();
    assert!(unused.contains("\nrPS-DSF,3,1,1,3\n"));
}

#[test]
fn missing_scenario_file_fails() {
    let out = fairsched(&["validate", "/no/such/file.json"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}
