use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gsparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsparse"))
        .args(args)
        .env_remove("GSPARSE_SEED")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_writes_result_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "A.csv", "1,2\n");
    let y = write(dir.path(), "y.csv", "2\n");
    let spec = write(dir.path(), "reg.json", r#"{"kind": "l1", "lambda": [1.0]}"#);
    let out = dir.path().join("result.json");
    let trace = dir.path().join("trace.json");
    let status = gsparse(&[
        "solve", "--matrix", path(&a), "--y", path(&y), "--spec", path(&spec), "--K", "1", "--eps-bar", "1e-9",
        "--max-iter", "500", "--trace", path(&trace), "--out", path(&out),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let c = result["c_bar"].as_array().unwrap();
    assert!(c[0].as_f64().unwrap().abs() < 1e-6);
    assert!((c[1].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(result["termination"], "EpsBelowThreshold");
    let trace: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(trace.as_array().unwrap().len() as u64, result["iterations"].as_u64().unwrap());
}

#[test]
fn sparsity_and_reg_eval() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "reg.json", r#"{"kind": "l1", "lambda": [1.0]}"#);
    let x = write(dir.path(), "x.csv", "3\n-0.1\n0.2\n");
    let rep = json(&gsparse(&["sparsity", "--spec", path(&spec), "--x", path(&x), "--K", "1", "--eps", "0.5"]));
    assert!((rep["tail_value"].as_f64().unwrap() - 0.3).abs() < 1e-15);
    assert_eq!(rep["is_member"], true);
    assert_eq!(rep["selected_support"], serde_json::json!([0]));
    let rep = json(&gsparse(&["reg", "eval", "--spec", path(&spec), "--x", path(&x)]));
    assert!((rep["value"].as_f64().unwrap() - 3.3).abs() < 1e-15);
}

#[test]
fn nsp_check_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "A.csv", "1,2\n");
    let spec = write(dir.path(), "reg.json", r#"{"kind": "l1", "lambda": [1.0]}"#);
    let rep = json(&gsparse(&[
        "nsp", "check", "--matrix", path(&a), "--spec", path(&spec), "--K", "1", "--gamma", "1", "--delta", "0.1",
        "--samples", "200", "--seed", "7",
    ]));
    assert_eq!(rep["holds_on_samples"], false);
    assert!(rep["witness"].is_array());
    assert_eq!(rep["seed"], 7);
}

#[test]
fn dist_verify_runs() {
    let rep = json(&gsparse(&["dist", "verify", "--identity", "laplace", "--sigma", "1", "--lambda", "1", "--n", "20000", "--seed", "3"]));
    assert!(rep["ks_statistic"].as_f64().unwrap() < 0.02);
    let rep = json(&gsparse(&["dist", "verify", "--identity", "cl-cg", "--n", "20000", "--seed", "3"]));
    assert!(rep["ks_statistic"].as_f64().unwrap() < 0.03);
}

#[test]
fn sweep_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sweep.json",
        r#"{"grid": {"m": [8], "n": [16], "K_true": [1]}, "trials": 2,
            "solver": {"K": 7, "eps_bar": 1e-9, "max_iter": 300},
            "regularizer": "reg.json", "base_seed": 1}"#,
    );
    write(dir.path(), "reg.json", r#"{"kind": "l1", "lambda": [1.0]}"#);
    let plain = gsparse(&["sweep", "--config", path(&config)]);
    assert!(plain.status.success(), "{}", String::from_utf8_lossy(&plain.stderr));
    let text = String::from_utf8(plain.stdout.clone()).unwrap();
    assert!(text.starts_with("m,n,K_true,trial,seed,success,rel_error,iterations,eps_final,wall_ms,error\n"));
    assert_eq!(text.lines().count(), 3);
    let overridden = Command::new(env!("CARGO_BIN_EXE_gsparse"))
        .args(["sweep", "--config", path(&config)])
        .env("GSPARSE_SEED", "2")
        .output()
        .unwrap();
    assert!(overridden.status.success());
    assert_ne!(plain.stdout, overridden.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "reg.json", r#"{"kind": "l1", "lambda": [1.0]}"#);
    let bad = write(dir.path(), "bad.csv", "1,2\n3\n");
    let y = write(dir.path(), "y.csv", "1\n1\n");
    let out = gsparse(&["solve", "--matrix", path(&bad), "--y", path(&y), "--spec", path(&spec), "--K", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let singular = write(dir.path(), "singular.csv", "1,1,1\n2,2,2\n");
    let out = gsparse(&["solve", "--matrix", path(&singular), "--y", path(&y), "--spec", path(&spec), "--K", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = gsparse(&["solve", "--matrix", path(&singular)]);
    assert_eq!(out.status.code(), Some(2));
}
