use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_handover-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn handover-sim")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tiny_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "schema_version": 1,
        "network": {
            "num_users": 1, "num_cells": 2, "horizon": 10, "ho_mode": { "static": { "tho": [], "cho": [0] } },
            "max_preparations": 2, "capacity": 1, "bandwidth": 1.0, "alpha": 20.0
        },
        "scenario": {
            "kind": { "volatile": { "period": 3, "range_db": [0.0, 30.0] } },
            "costs": { "uniform": { "a": 0.5, "b": 0.1 } }
        },
        "policies": [ { "contra": {} }, { "tho": { "ttt": 1 } } ],
        "seeds": [7]
    });
    let path = dir.join("tiny.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn smoke_run_writes_one_ledger_row_per_slot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    let o = run(&["run", "--config", s(&cfg), "--out", s(&out), "--dump-learner"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ledger = std::fs::read_to_string(out.join("contra_seed7.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 11, "header plus 10 slots");
    assert!(out.join("contra_seed7.summary.json").exists());
    assert!(out.join("contra_seed7.learner.csv").exists());
    assert!(out.join("tho-ttt1_seed7.csv").exists());
    assert!(!out.join("tho-ttt1_seed7.learner.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["run", "--config", s(&cfg), "--out", s(&a), "--seeds", "3,4"]).status.success());
    assert!(run(&["run", "--config", s(&cfg), "--out", s(&b), "--seeds", "3,4", "--parallel", "2"]).status.success());
    let mut n = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            let name = p.file_name().unwrap();
            assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name:?}");
            n += 1;
        }
    }
    assert_eq!(n, 4);
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    v["network"]["num_userz"] = Value::from(3);
    std::fs::write(&cfg, v.to_string()).unwrap();
    for sub in ["run", "validate"] {
        let o = run(&[sub, "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("num_userz"));
    }
}

#[test]
fn missing_config_and_bad_flags_exit_2() {
    assert_eq!(run(&["validate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(run(&["run"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = run(&["run", "--config", s(&cfg), "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compare_sorts_by_objective_and_refuses_mixed_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    assert!(run(&["run", "--config", s(&cfg), "--out", s(&out), "--seeds", "7,8"]).status.success());
    let o = run(&["compare", s(&out.join("contra_seed7.summary.json")), s(&out.join("tho-ttt1_seed7.summary.json"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("policy,seed,total_objective"));
    let obj = |r: &str| r.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(obj(rows[1]) >= obj(rows[2]));

    let o = run(&["compare", s(&out.join("contra_seed7.summary.json")), s(&out.join("contra_seed8.summary.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let hash = |p: &Path| -> String {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["scenario_hash"].as_str().unwrap().to_string()
    };
    assert!(err.contains(&hash(&out.join("contra_seed7.summary.json"))));
    assert!(err.contains(&hash(&out.join("contra_seed8.summary.json"))));
}

#[test]
fn gen_trace_writes_a_loadable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = run(&["gen-trace", "--out", s(&trace), "--cells", "3", "--points", "5", "--seed", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 26);
}

fn strip_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

fn assert_close(path: &str, a: &Value, b: &Value) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{path}: {x} vs {y}");
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (k, xv) in x {
                assert_close(&format!("{path}.{k}"), xv, &y[k]);
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn shipped_example_matches_golden_summaries() {
    let root = repo_root();
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", s(&root.join("configs/example.json")), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let golden = root.join("configs/golden");
    let mut n = 0;
    for entry in std::fs::read_dir(&golden).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap();
        let want: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let got: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        assert_close(&name.to_string_lossy(), &strip_timing(got), &strip_timing(want));
        n += 1;
    }
    assert_eq!(n, 4);
}
