use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bordertn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    let text = match args.iter().position(|a| *a == "--out") {
        Some(i) => std::fs::read(args[i + 1]).unwrap(),
        None => out.stdout,
    };
    serde_json::from_slice(&text).expect("output is JSON")
}

fn err_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} should fail");
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bordertn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn square_cost_example() {
    let v = ok_json(&["cost", "--square", "--chi", "4", "--D1", "2", "--D2", "2", "--d", "2", "--Cmm", "1", "--Csvd", "1"]);
    assert_eq!(v["cost"].as_f64(), Some(6144.0));
}

#[test]
fn exact_rvb_cost_grows_with_size() {
    let a = ok_json(&["cost", "--exact-rvb", "--L", "2"]);
    let b = ok_json(&["cost", "--exact-rvb", "--L", "3"]);
    assert!(b["exact"].as_f64().unwrap() > a["exact"].as_f64().unwrap());
    assert!(a["degeneration"].as_f64().unwrap() > 0.0);
}

#[test]
fn lambda_degeneration_certificate() {
    let v = ok_json(&["verify", "--family", "lambda_degeneration_222"]);
    assert_eq!(v["d"], 2);
    assert_eq!(v["e"], 2);
    assert_eq!(v["leading"], "lambda");
    assert!((v["proportionality"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn zoo_lists_and_emits_families() {
    let list = ok_json(&["zoo"]);
    for name in ["w", "lambda-restriction-223", "lambda-restriction-333", "lambda-degeneration", "mamu3-ghz", "rvb"] {
        assert!(list["constructions"].get(name).is_some(), "{name} missing");
    }
    let r = ok_json(&["zoo", "lambda-restriction-333"]);
    assert_eq!(r["certificate"]["d"], 0);
    let g = ok_json(&["zoo", "mamu3-ghz", "--dims", "2,2,2"]);
    assert_eq!(g["ghz"]["level"], 3);
}

#[test]
fn zoo_output_feeds_verify() {
    let path = tmp("w.json");
    ok_json(&["zoo", "w", "--L", "4", "--out", path.to_str().unwrap()]);
    let w = tmp("w-target.json");
    std::fs::write(&w, "{\"structure\": null}").unwrap();
    let e = err_json(&["verify", "--family", path.to_str().unwrap(), "--target", w.to_str().unwrap()]);
    assert!(e["error"]["kind"].is_string());
    let rec = ok_json(&["reconstruct", "--family", "w", "--L", "4"]);
    assert!(rec["relative_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn expectation_matches_exact_contraction() {
    let fam = tmp("rvb.json");
    ok_json(&["zoo", "rvb", "--rows", "1", "--cols", "2", "--out", fam.to_str().unwrap()]);
    let e = ok_json(&["expect", "--family", fam.to_str().unwrap(), "--observable", "identity"]);
    let lam = tmp("lambda.json");
    ok_json(&["build", "--lattice", "kagome-lambda", "--rows", "1", "--cols", "2", "--out", lam.to_str().unwrap()]);
    let c = ok_json(&["contract", "--structure", lam.to_str().unwrap(), "--exact"]);
    let (er, ei) = pair(&e["value"]);
    let (cr, _) = pair(&c["value"]);
    assert!((er - cr).abs() < 1e-8 * cr.abs() && ei.abs() < 1e-8 * cr.abs(), "{er} vs {cr}");
    assert_eq!(e["points"].as_array().unwrap().len(), e["weights"].as_array().unwrap().len());
    let real = ok_json(&["expect", "--family", fam.to_str().unwrap(), "--mode", "real", "--points", "12"]);
    assert!((pair(&real["value"]).0 - cr).abs() < 1e-6 * cr);
}

#[test]
fn truncated_contraction_reports_model_cost() {
    let v = ok_json(&["contract", "--lattice", "square", "--lx", "4", "--ly", "4", "--chi", "4", "--seed", "7"]);
    assert_eq!(v["schedule"], "square");
    assert!(v["model_cost"].as_f64().unwrap() > 0.0);
    assert!(v["max_bond"].as_u64().unwrap() <= 4);
}

#[test]
fn output_is_deterministic() {
    let args = ["contract", "--lattice", "kagome-mamu", "--rows", "2", "--cols", "2", "--chi", "8", "--seed", "3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let other = run(&["contract", "--lattice", "kagome-mamu", "--rows", "2", "--cols", "2", "--chi", "8", "--seed", "4"]);
    assert_ne!(run(&args).stdout, other.stdout);
}

#[test]
fn errors_are_structured() {
    assert_eq!(err_json(&["contract", "--lattice", "square", "--chi", "0"])["error"]["kind"], "invalid_argument");
    assert_eq!(err_json(&["verify", "--family", "no-such-thing"])["error"]["kind"], "invalid_argument");
    let bad = tmp("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let e = err_json(&["build", "--structure", bad.to_str().unwrap()]);
    assert!(e["error"]["message"].as_str().unwrap().len() > 3);
    assert!(err_json(&["verify", "--family", "w", "--tol=-1"])["error"]["kind"].is_string());
    assert_eq!(err_json(&["cost", "--no-such-flag"])["error"]["kind"], "usage");
}

#[test]
fn demos_run() {
    let w = ok_json(&["demo-w", "--L", "5"]);
    assert!(w["border_mps_error"].as_f64().unwrap() < 1e-10);
    let r = ok_json(&["demo-rvb", "--chi", "16"]);
    assert!(r["relative_error"].as_f64().unwrap() < 1e-8);
}
