use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idemkit"))
        .args(args)
        .env("IDEMKIT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gen_has_requested_norm() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let out = run(&[
        "gen",
        "--n",
        "4",
        "--k",
        "2",
        "--a",
        "1",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert!((v["norm"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["is_projection"], false);
}

#[test]
fn gen_flags_projections_and_rejects_rank_zero() {
    let out = run(&["gen", "--n", "2", "--k", "1", "--a", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["is_projection"], true);
    assert_eq!(
        run(&["gen", "--n", "2", "--k", "0", "--a", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["gen", "--n", "2"]).status.code(), Some(2));
}

#[test]
fn analyze_generated_input_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let p = path.to_str().unwrap();
    assert!(
        run(&["gen", "--n", "7", "--k", "3", "--a", "2.5", "--seed", "9", "--out", p])
            .status
            .success()
    );
    let out = run(&["analyze", p, "--samples", "300"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!(v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
    assert!(v.get("timings").is_none());
    let out = run(&["analyze", p, "--samples", "50", "--timings"]);
    assert!(json(&out)["timings"].is_object());
}

#[test]
fn analyze_reports_the_distance_regression() {
    let dir = tempfile::tempdir().unwrap();
    // Q = [[I2, diag(1, 0)], [0, 0]]
    let q = "[[1,0,1,0],[0,1,0,0],[0,0,0,0],[0,0,0,0]]";
    let p = write(dir.path(), "ex.json", q);
    let out = run(&["analyze", &p, "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let ce = &json(&out)["counterexample"];
    assert!((ce["p_minus_q"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(ce["p_minus_q"].as_f64().unwrap() > ce["min_dist"].as_f64().unwrap());
}

#[test]
fn analyze_rejects_non_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.json", "[[1,1],[1,0]]");
    let out = run(&["analyze", &p]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not idempotent"));
    assert_eq!(
        run(&["analyze", "/nonexistent/q.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn nrange_segment_for_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.json", "[[0,0],[0,1]]");
    let out = run(&["nrange", &p, "--angles", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "alpha,h,re,im");
    assert_eq!(rows.len(), 17);
    for r in &rows[1..] {
        let f: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3].abs() < 1e-12 && f[2] > -1e-12 && f[2] < 1.0 + 1e-12);
    }
}

#[test]
fn nrange_qr_header_has_center() {
    let out = run(&["nrange", "--qr", "3", "--angles", "32", "--mesh", "100"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("# ellipse:")).unwrap();
    let e: Value = serde_json::from_str(line.trim_start_matches("# ellipse:").trim()).unwrap();
    assert_eq!(e["x0"].as_f64(), Some(1.5));
}

#[test]
fn nrange_sr_reports_residual_above_floor() {
    let out = run(&["nrange", "--sr", "3", "--angles", "256", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    let h = &v["header"];
    assert!(h["fit_residual"].as_f64().unwrap() > h["nonellipse_floor"].as_f64().unwrap());
    assert_eq!(v["rows"].as_array().unwrap().len(), 256);
    assert!(v["rows"][0]["exact"].is_number());
}

#[test]
fn nrange_rejects_bad_sources() {
    assert_eq!(run(&["nrange"]).status.code(), Some(2));
    assert_eq!(run(&["nrange", "--sr", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["nrange", "--qr", "3", "--angles", "4"]).status.code(),
        Some(2)
    );
}

#[test]
fn outputs_are_byte_identical() {
    let a = run(&["gen", "--n", "6", "--k", "2", "--a", "1.5", "--seed", "11"]);
    let b = run(&["gen", "--n", "6", "--k", "2", "--a", "1.5", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "q.json",
        std::str::from_utf8(&a.stdout).unwrap(),
    );
    let x = run(&["analyze", &p, "--samples", "100", "--seed", "4"]);
    let y = Command::new(env!("CARGO_BIN_EXE_idemkit"))
        .args(["analyze", &p, "--samples", "100", "--seed", "4"])
        .env("IDEMKIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(x.stdout, y.stdout);
    let s1 = run(&["nrange", "--sr", "2", "--angles", "64"]);
    let s2 = run(&["nrange", "--sr", "2", "--angles", "64"]);
    assert_eq!(s1.stdout, s2.stdout);
}

#[test]
fn bad_thread_count_is_an_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_idemkit"))
        .args(["gen", "--n", "3", "--k", "1", "--a", "1"])
        .env("IDEMKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
