use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hypotorus(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypotorus"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HYPOTORUS_THREADS", "1")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let code = |args: &[&str]| hypotorus(out, args).status.code().unwrap();
    assert_eq!(code(&["solve", "--c", "1/2", "--f", "exp(it)", "--f-modes", "5", "--modes", "8", "--grid", "16"]), 0);
    assert_eq!(code(&["solve", "--c", "1", "--f", "exp(it)", "--modes", "8", "--grid", "16"]), 2);
    assert_eq!(code(&["solve", "--c", "1/2", "--modes", "8"]), 1);
    assert_eq!(code(&["classify", "--c", "1/2 + nonsense"]), 1);
    assert_eq!(code(&["diophantine", "--kappa", "1"]), 2);
    assert_eq!(code(&["decay", "--input", "missing.csv"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
}

#[test]
fn single_mode_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypotorus(dir.path(), &["solve", "--c", "1/2", "--f", "exp(it)", "--f-modes", "5", "--modes", "8", "--grid", "16"]);
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["residuals_ok"], Value::Bool(true));
    let mut rdr = csv::Reader::from_path(dir.path().join("u.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let mode = headers.iter().position(|h| h == "j").unwrap();
    let (re, im) = (headers.iter().position(|h| h == "re").unwrap(), headers.iter().position(|h| h == "im").unwrap());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let amp = rec[re].parse::<f64>().unwrap().hypot(rec[im].parse::<f64>().unwrap());
        let expected = if &rec[mode] == "5" { 1.0 / 6.5 } else { 0.0 };
        assert!((amp - expected).abs() < 1e-12);
    }
}

#[test]
fn classify_branches() {
    let dir = tempfile::tempdir().unwrap();
    let branch = |c: &str| {
        let out = hypotorus(dir.path(), &["classify", "--c", c]);
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        (v["decision"].as_str().unwrap().to_string(), v["branch"].as_str().unwrap().to_string())
    };
    let expect = [
        ("1/2 + i", "GH", "thm-3.10-sign"),
        ("1/2", "GH", "thm-3.6b-diophantine"),
        ("1/3", "notGH", "prop-3.9-resonance"),
        ("i sin t", "notGH", "thm-3.15-sign-change"),
        ("0.2 + i(1 - cos t)", "GH", "thm-3.10-sign"),
    ];
    for (c, decision, label) in expect {
        assert_eq!(branch(c), (decision.to_string(), label.to_string()), "c = {c}");
    }
}

#[test]
fn solve_then_decay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let status = hypotorus(out, &["solve", "--c", "0.3 + i(1 - cos t)", "--f", "cos t", "--f-decay", "0.5", "--modes", "32", "--grid", "32"]).status;
    assert!(status.success());
    let u = out.join("u.csv");
    let status = hypotorus(out, &["decay", "--input", u.to_str().unwrap(), "--modes", "32", "--k-max", "4", "--m-max", "4"]).status;
    assert!(status.success());
    let fit = read_json(&out.join("decay.json"));
    assert!(fit["fit"]["epsilon"].as_f64().unwrap() > 0.0);
    assert!(out.join("pm.csv").exists());
}

#[test]
fn print_config_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let first = hypotorus(dir.path(), &["classify", "--c", "i sin t", "--model", "harmonic1d-power:2", "--mu", "0.75", "--print-config"]);
    assert!(first.status.success());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, &first.stdout).unwrap();
    let second = hypotorus(dir.path(), &["classify", "--config", cfg.to_str().unwrap(), "--print-config"]);
    assert_eq!(first.stdout, second.stdout);
}
