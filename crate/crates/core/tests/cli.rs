//! End-to-end tests of the `maxstef` binary.

use std::path::Path;
use std::process::{Command, Output};

fn maxstef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxstef")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const BINARY: &str = r#"{
  "schema": 1,
  "mixture": { "masses": [1.0, 2.0], "alpha": 0.1 },
  "grid": { "n_cells": 16, "length": 1.0, "bc": "periodic" },
  "mode": "non-isothermal",
  "initial": { "preset": "binary-counterdiffusion" },
  "time": { "final_time": 0.002, "snapshot_interval": 0.001 }
}"#;

#[test]
fn check_on_uniform_equilibrium_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "schema": 1, "mixture": { "masses": [1.0, 4.0] }, "grid": { "n_cells": 8 } }"#);
    let out = maxstef(&["check", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("PASS compatibility"));
    assert!(out.stdout.is_empty());
}

#[test]
fn run_writes_snapshots_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BINARY);
    let out_dir = dir.path().join("out");
    let out = maxstef(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let snaps = std::fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    let times: std::collections::BTreeSet<&str> = snaps.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(times.len(), 3, "{times:?}");
    assert!(out_dir.join("report.csv").exists());
}

#[test]
fn limit_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BINARY);
    let out_dir = dir.path().join("lim");
    let out = maxstef(&["limit", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("limit.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 16 * 2);
    assert!(out_dir.join("limit_matrices.csv").exists());
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "schema": 1, "mixture": { "masses": [1.0], "colour": 3 } }"#);
    let out = maxstef(&["check", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mixture.colour"));

    let cfg = write_config(dir.path(), r#"{ "schema": 1, "mixture": { "masses": [1.0, -2.0] } }"#);
    let out = maxstef(&["check", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mixture.masses[1]"));

    assert_eq!(maxstef(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(maxstef(&["check", "/nonexistent/config.json"]).status.code(), Some(1));

    let cfg = write_config(dir.path(), BINARY);
    let out = maxstef(&["sweep", &cfg, "--alphas", "0.1,0.2,0.05", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(maxstef(&["--help"]).status.code(), Some(0));
}
