use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_allee-herd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn h2_preset_file_gives_preset_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h2.json");
    fs::write(&cfg, r#"{"params": {"preset": "h2"}}"#).unwrap();
    let o = bin(&["equilibria", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let v = read_json(&dir.path().join("equilibria.json"));
    let p = &v["params"];
    assert_eq!(p["m"].as_f64(), Some(-0.5));
    assert!((p["n"].as_f64().unwrap() - 50.0 / 41.0).abs() < 1e-15);
    assert!((p["c"].as_f64().unwrap() - 100.0 / 41.0).abs() < 1e-15);
    assert_eq!(p["d1"].as_f64(), Some(0.1));
    let e31 = v["equilibria"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["kind"] == "E31")
        .unwrap();
    assert!((e31["u"].as_f64().unwrap() - 0.09).abs() < 1e-6);
    assert!((e31["v"].as_f64().unwrap() - 0.123).abs() < 1e-6);
}

#[test]
fn empty_config_fails_at_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, "").unwrap();
    let o = bin(&["curves", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("at #:"), "{err}");
}

#[test]
fn inadmissible_n_names_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["classify", "--set", "params.preset=h2", "--set", "params.n=-0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n > max(0, -m)"));
}

#[test]
fn unknown_override_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["equilibria", "--set", "params.preset=h2", "--set", "params.thetta=0.7"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("#/params/thetta"));
}

#[test]
fn curves_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["curves", "--set", "params.preset=h2", "--set", "params.d2=0.2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,d2,theta_H,theta_T"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    let d2s: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(d2s.iter().all(|d| (0.0..=0.5).contains(d)));
    assert!(rows.iter().filter(|r| r[0] == "0").all(|r| r[3].is_empty()));
    let disp = fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert!(disp.starts_with("theta,k2,re_lambda,trace,det\n"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["scan", "--set", "params.preset=h2",
        "--set", r#"scan.theta={"min":0.1,"max":1.4,"count":6}"#,
        "--set", r#"scan.d2={"min":0.01,"max":0.5,"count":5}"#];
    assert!(bin(&args, a.path()).status.success());
    assert!(bin(&args, b.path()).status.success());
    for f in ["regions.csv", "diagram.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn scan_respects_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_allee-herd"))
        .args(["scan", "--set", "params.preset=h2",
            "--set", r#"scan.theta={"min":0.1,"max":1.4,"count":3}"#,
            "--set", r#"scan.d2={"min":0.01,"max":0.5,"count":3}"#, "--out"])
        .arg(dir.path())
        .env("ALLEE_HERD_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let rows = fs::read_to_string(dir.path().join("regions.csv")).unwrap();
    assert_eq!(rows.lines().count(), 10);

    let bad = Command::new(env!("CARGO_BIN_EXE_allee-herd"))
        .args(["equilibria", "--set", "params.preset=h2", "--out"])
        .arg(dir.path())
        .env("ALLEE_HERD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reproduce_fig2b_reports_turing_hopf_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["reproduce", "fig2b"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("fig2b/report.json"));
    let th = v["reports"]["diagram"]["th_point"].as_array().unwrap();
    assert!((th[0].as_f64().unwrap() - 0.2136).abs() < 5e-4);
    assert!((th[1].as_f64().unwrap() - 0.6627).abs() < 5e-4);
    assert!(dir.path().join("fig2b/curves.csv").exists());
}

#[test]
fn reproduce_tolerance_failure_exits_4_with_diff() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["reproduce", "nf-hopf1"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL") && err.contains("computed") && err.contains("expected"), "{err}");
}

#[test]
fn unknown_figure_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["reproduce", "fig9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_point_exits_3() {
    // pitchfork needs a nonzero mode
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["normal-form", "--set", "params.preset=h2", "--set", "normal_form.kind=pitchfork", "--set", "normal_form.s=0"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_writes_fields_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{
          "params": {"preset": "h2", "theta": 0.68, "d2": 0.4},
          "simulate": {
            "n_cells": 16, "t_end": 4.0, "output_every": 1.0,
            "initial": {"cosine": {"u0": 0.09, "au": 0.001, "v0": 0.123, "av": 0.0}}
          }
        }"#,
    )
    .unwrap();
    let o = bin(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let u = fs::read_to_string(dir.path().join("u.csv")).unwrap();
    let header: Vec<&str> = u.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 17);
    assert_eq!(u.lines().count(), 6);
    let m = read_json(&dir.path().join("manifest.json"));
    assert!(m["summary"]["attractor"].is_string());
    assert_eq!(m["config"]["simulate"]["n_cells"], 16);
}

#[test]
fn simulate_rejects_unstable_fixed_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["simulate", "--set", "params.preset=h2",
            "--set", r#"simulate={"t_end":1.0,"dt":0.5,"initial":{"constant":{"u0":0.09,"v0":0.123}}}"#],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stability limit"));
}
