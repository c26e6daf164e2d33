use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn treespec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treespec"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_equal_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = treespec(dir.path(), &["--preset", "fig-equal", "solve", "--lambda", "-1,0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record = read_json(&dir.path().join("solve.json"));
    assert!(record["residual"].as_f64().unwrap() < 1e-10);
    let mu = record["mu"].as_array().unwrap();
    assert_eq!(mu.len(), 2);
    assert_eq!(mu[0], mu[1]);
    assert!(record["rho"].as_f64().unwrap() < 1.0);
    assert_eq!(record["filters_passed"].as_array().unwrap().len(), 4);
}

#[test]
fn exceptional_point_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let lambda = format!("{},0", std::f64::consts::PI.powi(2));
    let out = treespec(dir.path(), &["--preset", "fig-equal", "solve", "--lambda", &lambda]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("solve.json").exists());
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[graph]\nlengths = [1.0, \n").unwrap();
    let out = treespec(dir.path(), &["--config", cfg.to_str().unwrap(), "solve", "--lambda", "-1,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    std::fs::write(&cfg, "[graph]\nlengths = [1.0, -2.0]\n").unwrap();
    let out = treespec(dir.path(), &["--config", cfg.to_str().unwrap(), "solve", "--lambda", "-1,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_selects_graph() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[graph]\nlengths = [1.0, \"2/1\"]\n[scan]\nrange = [0.0, 5.0]\npoints = 201\n").unwrap();
    let out = treespec(dir.path(), &["--config", cfg.to_str().unwrap(), "scan"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 202);
}

#[test]
fn scan_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--preset", "fig-089", "scan", "--points", "301"];
    assert!(treespec(a.path(), &args).status.success());
    assert!(treespec(b.path(), &args).status.success());
    let x = std::fs::read(a.path().join("scan.csv")).unwrap();
    let y = std::fs::read(b.path().join("scan.csv")).unwrap();
    assert_eq!(x, y);
    assert!(!x.contains(&b'\r'));
    let svg = std::fs::read_to_string(a.path().join("scan.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn fig_equal_multipliers_coincide() {
    let dir = tempfile::tempdir().unwrap();
    assert!(treespec(dir.path(), &["--preset", "fig-equal", "scan", "--points", "401"]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let f: Vec<f64> = row.split(',').take(10).map(|v| v.parse().unwrap()).collect();
        assert!((f[2] - f[6]).hypot(f[3] - f[7]) <= 1e-9, "{row}");
    }
}

fn first_band(stdout: &[u8]) -> Option<f64> {
    let text = String::from_utf8_lossy(stdout);
    let line = text.lines().find(|l| l.starts_with('['))?;
    line.trim_matches(|c| c == '[' || c == ']').split(',').next()?.trim().parse().ok()
}

#[test]
fn bands_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = treespec(dir.path(), &["--preset", "fig-equal", "bands", "--range", "0,1", "--points", "1000"]);
    assert!(out.status.success());
    assert!((first_band(&out.stdout).unwrap() - 0.274156).abs() < 1e-5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("spectral lower bound 0.27415"));

    let out = treespec(dir.path(), &["--preset", "fig-equal", "bands", "--range", "0,0.2", "--points", "200"]);
    assert!(out.status.success());
    assert!(first_band(&out.stdout).is_none());
    let csv = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    assert_eq!(csv, "lower,upper,resolution\n");

    let cfg = dir.path().join("three.toml");
    std::fs::write(&cfg, "[graph]\nlengths = [1.0, 1.0, 1.0]\n").unwrap();
    let out = treespec(dir.path(), &["--config", cfg.to_str().unwrap(), "bands", "--range", "0,1", "--points", "500"]);
    assert!(out.status.success());
    assert!((first_band(&out.stdout).unwrap() - 0.5325).abs() < 1e-4);
}

#[test]
fn shallow_oracle_is_not_graded() {
    let dir = tempfile::tempdir().unwrap();
    let out = treespec(dir.path(), &["--preset", "fig-equal", "oracle", "--depth", "1", "--mesh", "16"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("truncation-dominated"));
    let report = read_json(&dir.path().join("oracle_report.json"));
    assert_eq!(report["truncation_dominated"], Value::Bool(true));
    assert!(report["passed"].is_null());
}

#[test]
fn oracle_at_depth_six_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = treespec(dir.path(), &["--preset", "fig-equal", "oracle", "--depth", "6", "--mesh", "32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&dir.path().join("oracle_report.json"));
    assert!(report["coverage"].as_f64().unwrap() >= 0.9);
    assert!(report["deviation"].as_f64().unwrap() <= 0.02);
    let ratio = report["halving_ratio"].as_f64().unwrap();
    assert!(ratio > 1.0, "ratio {ratio}");
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = treespec(dir.path(), &["--preset", "fig-9", "solve", "--lambda", "-1,0"]);
    assert_eq!(out.status.code(), Some(1));
}
