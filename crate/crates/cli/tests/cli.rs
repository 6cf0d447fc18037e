use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aluthge_core::polar::make_power_pair;
use aluthge_core::radii::numerical_radius_sweep;
use aluthge_core::transforms::aluthge_general;
use aluthge_core::ComplexMatrix;
use serde_json::Value;
use tempfile::TempDir;

fn aluthge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aluthge")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHIFT2: &str = r#"{"rows":2,"cols":2,"entries":[[0,0],[1,0],[0,0],[0,0]]}"#;
const SHIFT2_SCALED: &str = r#"{"rows":2,"cols":2,"entries":[[0,0],[2,0],[0,0],[0,0]]}"#;

#[test]
fn radius_of_shift() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "shift2.json", SHIFT2);
    let out = aluthge(&["radius", "--input", s(&m), "--method", "sweep"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["method"], "sweep");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 4);

    let out = aluthge(&["radius", "--input", s(&m), "--method", "ellipse"]);
    assert!((stdout_json(&out)["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let out = aluthge(&["radius", "--input", s(&m), "--method", "sampling", "--samples", "500", "--seed", "3"]);
    let lower = stdout_json(&out)["value"].as_f64().unwrap();
    assert!(lower <= 0.5 + 1e-12 && lower > 0.4);
}

#[test]
fn check_equality_case() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "shift2x2_scaled.json", SHIFT2_SCALED);
    let out = aluthge(&["check", "--id", "yamazaki_t", "--a", s(&m), "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["slack"].as_f64().unwrap().abs() <= 1e-10);
    assert_eq!(v["passed"], true);
    assert_eq!(v["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", SHIFT2);
    let bad = write(&dir, "bad.json", r#"{"rows":2,"cols":2,"entries":[[0,0]]}"#);
    assert_eq!(aluthge(&["radius", "--input", s(&m), "--bogus"]).status.code(), Some(2));
    assert_eq!(aluthge(&["radius", "--input", s(&m), "--method", "power"]).status.code(), Some(2));
    assert_eq!(aluthge(&["radius", "--input", s(&bad)]).status.code(), Some(3));
    assert_eq!(aluthge(&["radius", "--input", s(&m), "--grid", "10"]).status.code(), Some(3));
    // Missing parameter, missing input, unknown id, constraint violation.
    assert_eq!(aluthge(&["check", "--id", "yamazaki_t", "--a", s(&m)]).status.code(), Some(3));
    assert_eq!(aluthge(&["check", "--id", "davidson_power", "--a", s(&m)]).status.code(), Some(3));
    assert_eq!(aluthge(&["check", "--id", "no_such_id", "--a", s(&m)]).status.code(), Some(3));
    let out = aluthge(&["check", "--id", "davidson_power", "--a", s(&m), "--b", s(&m)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive"));
}

#[test]
fn transform_then_radius_round_trips() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"rows":3,"cols":3,"entries":[[0.3,-1.2],[1.0,0.5],[0.0,0.7],[2.0,0.0],[-0.4,0.1],[0.9,-0.3],[0.2,0.2],[1.1,1.3],[-0.6,0.0]]}"#;
    let m = write(&dir, "a.json", text);
    let t = dir.path().join("t.json");
    let out = aluthge(&["transform", "--input", s(&m), "--pair", "power:0.25", "--out", s(&t)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let out = aluthge(&["radius", "--input", s(&t)]);
    let via_cli = stdout_json(&out)["value"].as_f64().unwrap();

    let a: ComplexMatrix = serde_json::from_str(text).unwrap();
    let tr = aluthge_general(&a, &make_power_pair(0.25).unwrap()).unwrap().transformed;
    let saved: ComplexMatrix = serde_json::from_str(&fs::read_to_string(&t).unwrap()).unwrap();
    assert_eq!(saved, tr);
    let direct = numerical_radius_sweep(&tr, 720, 1e-12).unwrap().value;
    assert!((via_cli - direct).abs() <= 1e-12);
}

const SMALL_CONFIG: &str = r#"{
  "ensembles": ["ginibre", "nilpotent_shift"],
  "dims": [2, 3],
  "trials_per_cell": 2,
  "ids": ["half_norm_power", "yamazaki_t", "power_r_t", "polarization", "block2x2_powers"]
}"#;

#[test]
fn verify_is_deterministic_and_report_reads_it() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "config.json", SMALL_CONFIG);
    let run = |name: &str, threads: &str| {
        let out_path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_aluthge"))
            .env("RAYON_NUM_THREADS", threads)
            .args(["verify", "--config", s(&cfg), "--seed", "42", "--out", s(&out_path)])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_path).unwrap()
    };
    let first = run("s1.json", "1");
    assert_eq!(first, run("s2.json", "1"));
    assert_eq!(first, run("s3.json", "3"));

    let other = dir.path().join("s4.json");
    let csv = dir.path().join("q.csv");
    let out = aluthge(&["verify", "--config", s(&cfg), "--seed", "43", "--out", s(&other), "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(first, fs::read(&other).unwrap());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 6);

    let out = aluthge(&["report", "--input", s(&dir.path().join("s1.json")), "--top-slack", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let rows = v["tightest"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["min_slack"].as_f64().unwrap() <= rows[1]["min_slack"].as_f64().unwrap());
    // The 2×2 shift is an equality case of both of these.
    assert!(rows[0]["min_slack"].as_f64().unwrap().abs() <= 1e-10);
}

#[test]
fn forensic_variant_completes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "forensic.json",
        r#"{"ensembles":["hermitian_psd"],"dims":[3],"trials_per_cell":3,"variant":"as_stated","ids":["block2x2_powers"]}"#,
    );
    let out = aluthge(&["verify", "--config", s(&cfg)]);
    // as_stated failures are collected, not fatal.
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["per_id"]["block2x2_powers"]["count"], 15);
}

#[test]
fn verify_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "u.json", r#"{"dimz":[2]}"#);
    assert_eq!(aluthge(&["verify", "--config", s(&unknown)]).status.code(), Some(3));
    let empty = write(&dir, "e.json", r#"{"dims":[]}"#);
    assert_eq!(aluthge(&["verify", "--config", s(&empty)]).status.code(), Some(3));
    let big = write(&dir, "b.json", r#"{"dims":[17]}"#);
    assert_eq!(aluthge(&["verify", "--config", s(&big)]).status.code(), Some(3));
}
