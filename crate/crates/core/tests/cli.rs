//! End-to-end tests of the `vnm` binary: exit codes, report files, and
//! byte-level determinism modulo the timestamp field.

use std::path::Path;
use std::process::{Command, Output};

fn vnm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnm"))
        .args(args)
        .env("VNM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn strip_timestamp(mut v: serde_json::Value) -> serde_json::Value {
    v["timestamp"] = serde_json::Value::Null;
    v
}

#[test]
fn independence_check_passes_with_exit_zero() {
    let out = vnm(&[
        "check",
        "--axiom",
        "independence",
        "--oracle",
        r#"{"utility":"log"}"#,
        "--trials",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["status"], "pass");
    assert_eq!(report["result"]["violations"].as_array().unwrap().len(), 0);
    assert_eq!(report["config"]["axiom"], "independence");
    assert!(report["version"].is_string());
}

#[test]
fn rank_dependent_check_exits_two_with_witness() {
    let out = vnm(&[
        "check",
        "--axiom",
        "independence",
        "--oracle",
        r#"{"oracle":"rdu","utility":"linear","gamma":2.0}"#,
        "--trials",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["status"], "falsified");
    assert!(!report["result"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn escaping_net_demo_exits_two_and_writes_the_net() {
    let dir = std::env::temp_dir().join(format!("vnm-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("net.json");
    let out = vnm(&[
        "demo",
        "lemma5",
        "--utility",
        "log",
        "--xstar",
        "1",
        "--x0",
        "2.718281828459045",
        "--n",
        "30",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["status"], "falsified");
    let net = report["result"]["net"].as_array().unwrap();
    assert_eq!(net.len(), 31);
    assert!(report["result"]["closedness_witness"].as_bool().unwrap());
    // level 12 onward sits within a hundredth of the anchor
    let row12 = &net[12];
    assert!(row12["dudley_to_limit"].as_f64().unwrap() < 0.01);
    let e12 = row12["e_u"].as_f64().unwrap();
    assert!((e12 - (1.0 + 2f64.powi(-12))).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn semicontinuity_demo_exits_two() {
    let out = vnm(&["demo", "semicontinuity", "--steps", "200"]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["result"]["closedness_witness"], true);
}

#[test]
fn density_demo_exits_zero_within_bounds() {
    let out = vnm(&["demo", "density", "--density", "uniform"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    for row in report["result"]["rows"].as_array().unwrap() {
        assert_eq!(row["within_bound"], true);
    }
}

#[test]
fn calibrate_writes_a_table_file() {
    let dir = std::env::temp_dir().join(format!("vnm-cal-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.json");
    let out = vnm(&[
        "calibrate",
        "--oracle",
        r#"{"utility":"crra","theta":2}"#,
        "--grid",
        "log:50:[0.1,10]",
        "--tol",
        "1e-10",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let table = &report["result"]["table"];
    assert!(table["anchors"]["x_star"].is_number());
    assert!(table["anchors"]["y_star"].is_number());
    assert_eq!(table["points"].as_array().unwrap().len(), 50);
    // anchors are normalized exactly
    let us: Vec<f64> = table["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["u"].as_f64().unwrap())
        .collect();
    assert!(us.iter().any(|&u| u == 1.0));
    assert!(us.iter().any(|&u| u == 0.0));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exhaust_verifies_log_bands() {
    let out = vnm(&[
        "exhaust",
        "--utility",
        "log",
        "--levels",
        "10",
        "--verify",
        "--probes",
        "10000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["result"]["verification"]["passed"], true);
}

#[test]
fn sequential_check_distinguishes_banded_from_trivial() {
    let pass = vnm(&[
        "check",
        "--axiom",
        "sequential",
        "--oracle",
        "log",
        "--trials",
        "100",
        "--seed",
        "3",
        "--levels",
        "6",
    ]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));

    let fail = vnm(&[
        "check",
        "--axiom",
        "sequential",
        "--oracle",
        "log",
        "--trials",
        "100",
        "--seed",
        "3",
        "--levels",
        "2",
        "--trivial-exhaustion",
    ]);
    assert_eq!(fail.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes_modulo_timestamp() {
    let args = [
        "check",
        "--axiom",
        "independence",
        "--oracle",
        r#"{"oracle":"rdu","utility":"linear","gamma":2.0}"#,
        "--trials",
        "500",
        "--seed",
        "11",
    ];
    let a = strip_timestamp(stdout_json(&vnm(&args)));
    let b = strip_timestamp(stdout_json(&vnm(&args)));
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn usage_errors_exit_one() {
    let bad_axiom = vnm(&[
        "check",
        "--axiom",
        "nonsense",
        "--oracle",
        "log",
        "--seed",
        "1",
    ]);
    assert_eq!(bad_axiom.status.code(), Some(1));

    let unknown_field = vnm(&[
        "check",
        "--axiom",
        "independence",
        "--oracle",
        r#"{"utility":"log","bogus":1}"#,
        "--seed",
        "1",
    ]);
    assert_eq!(unknown_field.status.code(), Some(1));

    let bad_grid = vnm(&[
        "calibrate",
        "--oracle",
        "log",
        "--grid",
        "log:50:[-1,10]",
    ]);
    assert_eq!(bad_grid.status.code(), Some(1));

    let missing_seed = vnm(&["check", "--axiom", "independence", "--oracle", "log"]);
    assert_eq!(missing_seed.status.code(), Some(1));
}

#[test]
fn oracle_config_from_file() {
    let dir = std::env::temp_dir().join(format!("vnm-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("oracle.json");
    std::fs::write(&cfg, r#"{"utility":"sqrt"}"#).unwrap();
    let out = vnm(&[
        "check",
        "--axiom",
        "weak-order",
        "--oracle",
        cfg.to_str().unwrap(),
        "--trials",
        "10",
        "--seed",
        "5",
        "--sample-size",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

/// The report schema is stable: every run carries the same envelope keys.
#[test]
fn report_envelope_is_schema_stable() {
    let out = vnm(&[
        "check",
        "--axiom",
        "mixture",
        "--oracle",
        "linear",
        "--trials",
        "100",
        "--seed",
        "9",
    ]);
    let report = stdout_json(&out);
    for key in ["version", "config", "timestamp", "status", "result"] {
        assert!(report.get(key).is_some(), "missing envelope key {key}");
    }
    let result = &report["result"];
    for key in ["axiom", "trials", "verdict", "one_sided", "note", "violations"] {
        assert!(result.get(key).is_some(), "missing report key {key}");
    }
}

#[test]
fn segmental_check_reports_a_threshold() {
    let out = vnm(&[
        "check",
        "--axiom",
        "segmental",
        "--oracle",
        "log",
        "--seed",
        "21",
        "--grid-n",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let t_bar = report["result"]["data"]["t_bar"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&t_bar));
}

/// Reports must be written even when the demo "fails" by design.
#[test]
fn falsified_reports_are_still_written() {
    let dir = std::env::temp_dir().join(format!("vnm-fals-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = vnm(&[
        "check",
        "--axiom",
        "weakstar",
        "--oracle",
        "log",
        "--trials",
        "8",
        "--seed",
        "2",
        "--report",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(Path::new(&path).exists());
    std::fs::remove_dir_all(&dir).ok();
}
