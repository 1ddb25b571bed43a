//! Exit-code and output-file contract of the command-line interface.
//!
//! The binary promises: 0 on success, 2 for configuration problems, 3 for
//! numerical failures (including a validation that ran and found defects),
//! 4 when `--assert-slopes` finds a rate below its threshold. These tests
//! drive the compiled binary and only ever use tiny interval ladders, so
//! the whole file runs in seconds.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-poisson"))
        .args(args)
        .output()
        .expect("binary failed to launch")
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "validate",
        "--case",
        "interval",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::json!(true));
    // The report embeds the config it ran under.
    assert_eq!(report["config"]["case"], serde_json::json!("interval"));
    assert!(report["geometry"].as_array().is_some_and(|g| !g.is_empty()));
}

#[test]
fn unknown_case_is_a_config_error() {
    let out = run(&["validate", "--case", "nowhere"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", text(&out.stderr));
    assert!(text(&out.stderr).contains("nowhere"));
}

#[test]
fn config_file_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown field.
    let cfg = write_cfg(
        dir.path(),
        r#"{ "case": "interval", "deltas": [0.1], "delta": 0.1 }"#,
    );
    let out = run(&["residual", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", text(&out.stderr));

    // Non-decreasing ladder.
    let cfg = write_cfg(
        dir.path(),
        r#"{ "case": "interval", "deltas": [0.05, 0.1] }"#,
    );
    let out = run(&["residual", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", text(&out.stderr));

    // No config source at all.
    let out = run(&["residual"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", text(&out.stderr));

    // --config and --case conflict (rejected by argument parsing).
    let out = run(&["residual", "--config", &cfg, "--case", "interval"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", text(&out.stderr));
}

#[test]
fn single_radius_still_reports_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{ "case": "interval", "deltas": [0.1], "h_ratio": 4 }"#,
    );
    let out = run(&["residual", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));
    assert!(text(&out.stdout).contains("rate fit skipped"));

    let csv = std::fs::read_to_string(dir.path().join("residual_study.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("delta,mode,norm_interior,norm_layer,norm_bd,weak_pairing_1,weak_pairing_bump")
    );
    // One row per mode (both by default), all at the single radius.
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.all(|l| l.starts_with("0.1,")));

    // No rates exist, so asserting them must fail with the slope exit code.
    let out = run(&[
        "residual",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--assert-slopes",
    ]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", text(&out.stderr));
}

#[test]
fn interval_slope_assertions_hold_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{ "case": "interval", "deltas": [0.1, 0.07, 0.05], "mode": "corrected" }"#,
    );
    let out = run(&[
        "residual",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--assert-slopes",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));
    assert!(text(&out.stdout).contains("all slope assertions hold"));

    // slopes.json carries the config and one result block per mode.
    let slopes: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("slopes.json")).unwrap())
            .unwrap();
    assert_eq!(slopes["config"]["case"], serde_json::json!("interval"));
    assert_eq!(slopes["config"]["mode"], serde_json::json!("corrected"));
    assert_eq!(slopes["results"].as_array().map(Vec::len), Some(1));
    assert_eq!(slopes["results"][0]["mode"], serde_json::json!("corrected"));
}

#[test]
fn solve_writes_solution_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), r#"{ "case": "interval", "deltas": [0.1] }"#);
    let out = run(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("solution_0.1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kind,x0,x1,x2,weight,value,exact"));
    assert!(lines.clone().any(|l| l.starts_with("interior,")));
    assert!(lines.any(|l| l.starts_with("boundary,")));
}

#[test]
fn cases_and_kernels_enumerate() {
    let out = run(&["cases"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    for name in ["interval", "arc", "disk", "hemisphere"] {
        assert!(stdout.contains(name), "cases output misses {name}");
    }

    let out = run(&["kernels"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("cosine"));
    assert!(text(&out.stdout).contains("pass"));
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}
