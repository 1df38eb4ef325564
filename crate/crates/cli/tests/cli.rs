use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn chainid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainid")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn result(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).expect("JSON report");
    doc["result"].clone()
}

const THREE: &str = r#"{"d": 3, "rows": [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]]}"#;
const BLOCKS: &str = r#"{"d": 4, "rows": [[0.499, 0.499, 0.001, 0.001], [0.499, 0.499, 0.001, 0.001], [0.001, 0.001, 0.499, 0.499], [0.001, 0.001, 0.499, 0.499]]}"#;

#[test]
fn distance_of_a_chain_to_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", THREE);
    let out = chainid(&["distance", "--a", s(&x), "--b", s(&x)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"distance\": 0.0"));
    assert_eq!(result(&out)["ratio_distance"], 0.0);
}

#[test]
fn props_is_reproducible() {
    let a = chainid(&["props", "--seed", "7"]);
    let b = chainid(&["props", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(result(&a)["pairs"], 1000);
}

#[test]
fn short_trajectory_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let r = write(dir.path(), "r.json", THREE);
    let t = write(dir.path(), "t.json", r#"{"d": 3, "states": [1, 2, 3, 2]}"#);
    let out = chainid(&["test", "--reference", s(&r), "--trajectory", s(&t), "--eps", "0.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let res = result(&out);
    assert_eq!(res["verdict"], "Reject");
    assert!(res["tested_component"].is_null());
    assert!(res["per_component"].as_array().unwrap().iter().all(|c| !c["fail"].is_null()));
}

#[test]
fn simulated_trajectory_from_the_reference_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let r = write(dir.path(), "r.json", THREE);
    let t = dir.path().join("t.json");
    let out = chainid(&["simulate", "--matrix", s(&r), "--mu", "stationary", "--steps", "40000", "--seed", "3", "--out", s(&t)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(result(&out)["length"], 40000);
    let report = dir.path().join("report.json");
    let args = ["test", "--reference", s(&r), "--trajectory", s(&t), "--eps", "0.5", "--seed", "4", "--report", s(&report)];
    let out = chainid(&args);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["result"]["verdict"], "Accept");
    assert_eq!(doc["manifest"]["seed"], 4);
    assert_eq!(doc["manifest"]["inputs"].as_object().unwrap().len(), 2);
    // Same manifest, same report.
    let again = dir.path().join("again.json");
    let mut args = args.to_vec();
    *args.last_mut().unwrap() = s(&again);
    chainid(&args);
    let a = std::fs::read_to_string(&report).unwrap();
    let b = std::fs::read_to_string(&again).unwrap();
    assert_eq!(a.replace(s(&report), ""), b.replace(s(&again), ""));
}

#[test]
fn partition_reports_one_based_components() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", BLOCKS);
    let out = chainid(&["partition", "--matrix", s(&p), "--beta", "0.1", "--seed", "0", "--certify"]);
    assert_eq!(out.status.code(), Some(0));
    let res = result(&out);
    assert_eq!(res["components"], serde_json::json!([[1, 2], [3, 4]]));
    assert_eq!(res["certificates"]["enumerated"], true);
}

#[test]
fn failed_certification_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", BLOCKS);
    let c = write(dir.path(), "c.json", r#"{"c2": 1000.0}"#);
    let out = chainid(&["--config", s(&c), "partition", "--matrix", s(&p), "--beta", "0.1", "--seed", "0", "--certify"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn iidtest_reports_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let pbar = write(dir.path(), "pbar.json", r#"{"d": 2, "p": [0.5, 0.5]}"#);
    let samples: Vec<usize> = (0..200).map(|k| 1 + k % 2).collect();
    let body = serde_json::json!({"n": 2, "samples": samples}).to_string();
    let smp = write(dir.path(), "s.json", &body);
    let out = chainid(&["iidtest", "--pbar", s(&pbar), "--samples", s(&smp), "--eps", "0.5", "--delta", "0.1", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(result(&out)["verdict"]["decision"], "Accept");
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    assert_eq!(chainid(&[]).status.code(), Some(2));
    assert_eq!(chainid(&["props"]).status.code(), Some(2));
    assert_eq!(chainid(&["distance", "--a", "/nonexistent", "--b", "/nonexistent"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"d": 2, "rows": [[0.5, 0.6], [0.5, 0.5]]}"#);
    assert_eq!(chainid(&["distance", "--a", s(&bad), "--b", s(&bad)]).status.code(), Some(2));
    let c = write(dir.path(), "c.json", r#"{"bogus": 1.0}"#);
    assert_eq!(chainid(&["--config", s(&c), "props", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn version_and_constants_flags() {
    let out = chainid(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.json", r#"{"c_len": 2.5}"#);
    let out = chainid(&["--config", s(&c), "--constants"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["c_len"], 2.5);
    assert_eq!(v["c_iid"], 1.0);
}
