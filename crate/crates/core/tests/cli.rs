//! End-to-end runs of the `erwlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn erwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erwlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn report_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is the JSON report")
}

fn without_runtime(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("runtime_seconds");
    v
}

const SIMULATE: &str = r#"{
    "model": {"s": 0.5, "alpha": 0.25},
    "schedule": {"kind": "proportional", "gamma": 0.5},
    "experiment": "simulate",
    "n": 1024, "replications": 10, "seed": 1
}"#;

#[test]
fn exact_pmf_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exact");
    let out = erwlab(&["exact", "--s", "1", "--p", "0.75", "--n", "3", "--m", "1", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(out_dir.join("pmf_T.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["state", "prob"]);
    let rows: Vec<(i64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let want = [(-1, 0.0625), (1, 0.375), (3, 0.5625)];
    assert_eq!(rows.len(), 3);
    for ((s, p), (ws, wp)) in rows.iter().zip(want) {
        assert_eq!(*s, ws);
        assert!((p - wp).abs() < 1e-15);
    }
    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("pmf_W_m.csv").exists());
}

#[test]
fn verify_clt_report_names_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "clt.json",
        r#"{"model": {"s": 0.5, "p": 0.625},
            "schedule": {"kind": "proportional", "gamma": 0.5},
            "experiment": "verify-clt", "n": 256, "replications": 2000, "seed": 3}"#,
    );
    let out = erwlab(&["run", &cfg]);
    let report = report_json(&out);
    assert_eq!(report["theory"]["variance"], 1.03125);
    assert_eq!(report["theory"]["regime"], "subcritical");
    assert!(report["theory"]["formula"].as_str().unwrap().contains("sqrt(m_n)"));
    let results = report["results"].as_array().unwrap();
    assert!(results.iter().all(|r| r.get("pass").is_some()));
    let failed = results.iter().any(|r| r["pass"] == Value::Bool(false));
    assert_eq!(out.status.code(), Some(if failed { 2 } else { 0 }));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.json", &SIMULATE.replace("\"replications\": 10", "\"replications\": 0"));
    let out = erwlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R = 0"));

    let cfg = write_config(dir.path(), "extra.json", &SIMULATE.replace("\"seed\": 1", "\"seed\": 1, \"sede\": 2"));
    let out = erwlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));

    assert_eq!(erwlab(&["run", "/nonexistent/config.json"]).status.code(), Some(1));
    assert_eq!(erwlab(&["bogus"]).status.code(), Some(1));
    assert_eq!(erwlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.json", SIMULATE);
    let a = erwlab(&["run", &cfg]);
    let b = erwlab(&["run", &cfg, "--threads", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(without_runtime(report_json(&a)), without_runtime(report_json(&b)));

    let c = report_json(&erwlab(&["run", &cfg, "--seed", "99"]));
    assert_eq!(c["seed"], 99);
    assert_eq!(c["config"]["seed"], 99);
    assert_ne!(c["results"], report_json(&a)["results"]);
}

#[test]
fn samples_csv_and_atomic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        &SIMULATE.replace("\"seed\": 1", "\"seed\": 1, \"output\": {\"samples\": true}"),
    );
    let out_dir = dir.path().join("out");
    let out = erwlab(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(out_dir.join("samples.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "rep,n,m,gamma_n,W_m,Sigma_m,T,Xi,A,B");
    assert_eq!(lines.count(), 10);
    let saved: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(without_runtime(saved), without_runtime(report_json(&out)));

    let capped = dir.path().join("capped");
    let out = erwlab(&["exact", "--s", "1", "--alpha", "0.2", "--beta", "0.5", "--n", "600", "--m", "300", "--out", capped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource limit exceeded"));
    let leftovers = fs::read_dir(&capped).map(|d| d.count()).unwrap_or(0);
    assert_eq!(leftovers, 0);
}

#[test]
fn schema_is_json() {
    let out = erwlab(&["schema"]);
    assert_eq!(out.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(schema["additionalProperties"], false);
    assert!(schema["properties"]["experiment"]["enum"].as_array().unwrap().len() == 7);
}
