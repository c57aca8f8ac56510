use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dfsctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfsctl")).args(args).output().expect("spawn dfsctl")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const DEPHASED_QUBIT: &str = r#"{
  "hilbert_dim": 2,
  "drift": {"pauli_sum": [{"coeff": 1.0, "string": "Z"}]},
  "controls": [{"label": "x", "pauli_sum": [{"coeff": 1.0, "string": "X"}]}],
  "noise": [{"rate": 0.5, "operator": {"pauli_sum": [{"coeff": 1.0, "string": "Z"}]}}]
}"#;

const CLOSED_QUBIT: &str = r#"{
  "hilbert_dim": 2,
  "drift": {"pauli_sum": [{"coeff": 1.0, "string": "Z"}]},
  "controls": [{"pauli_sum": [{"coeff": 1.0, "string": "X"}]}]
}"#;

const NO_CONTROLS: &str = r#"{
  "hilbert_dim": 2,
  "drift": {"dense": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]}
}"#;

// Noise on the first qubit; drift mixes its sectors and the only control
// acts on the second qubit, so no input restores invariance.
const LEAKY_PAIR: &str = r#"{
  "hilbert_dim": 4,
  "drift": {"pauli_sum": [{"coeff": 1.0, "string": "XI"}]},
  "controls": [{"pauli_sum": [{"coeff": 1.0, "string": "IX"}]}],
  "noise": [{"rate": 1.0, "operator": {"pauli_sum": [{"coeff": 1.0, "string": "ZI"}]}}]
}"#;

fn orders(v: &Value) -> Vec<u64> {
    v["result"]["sectors"].as_array().unwrap().iter().map(|s| s["order"].as_u64().unwrap()).collect()
}

#[test]
fn convert_writes_sparse_export() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "q.json", DEPHASED_QUBIT);
    let out_path = dir.path().join("g.json");
    let out = dfsctl(&["convert", "--model", m.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(v["result"]["bdim"], 4);
    assert_eq!(v["result"]["gc"].as_array().unwrap().len(), 1);

    let m = write(dir.path(), "empty.json", NO_CONTROLS);
    let v = json(&dfsctl(&["convert", "--model", m.to_str().unwrap()]));
    assert!(v["result"]["gc"].as_array().unwrap().is_empty());
}

#[test]
fn corrupt_and_missing_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "bad.json", "{\"hilbert_dim\": 2,");
    assert_eq!(dfsctl(&["convert", "--model", m.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(dfsctl(&["commutant", "--model", missing.to_str().unwrap()]).status.code(), Some(2));
    let m = write(dir.path(), "q.json", CLOSED_QUBIT);
    assert_eq!(dfsctl(&["commutant", "--model", m.to_str().unwrap(), "--tol", "bogus=1"]).status.code(), Some(2));
}

#[test]
fn commutant_sectors() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.json", DEPHASED_QUBIT);
    assert_eq!(orders(&json(&dfsctl(&["commutant", "--model", q.to_str().unwrap()]))), vec![1, 1]);
    let c = write(dir.path(), "c.json", CLOSED_QUBIT);
    assert_eq!(orders(&json(&dfsctl(&["commutant", "--model", c.to_str().unwrap()]))), vec![2]);
}

#[test]
fn reports_are_byte_identical_and_echo_settings() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "p.json", LEAKY_PAIR);
    let args = ["commutant", "--model", m.to_str().unwrap(), "--seed", "9", "--tol", "rank=1e-10"];
    let a = dfsctl(&args);
    let b = dfsctl(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["tolerances"]["rank"], 1e-10);
}

#[test]
fn closed_qubit_is_controllable() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "c.json", CLOSED_QUBIT);
    let m = m.to_str().unwrap();
    let v = json(&dfsctl(&["test", "--model", m, "--standard", "oc"]));
    assert_eq!(v["result"]["verdict"], true);
    let v = json(&dfsctl(&["test", "--model", m, "--sector", "1", "--standard", "loc"]));
    assert_eq!(v["result"]["report"]["verdict"], true);
    assert_eq!(v["result"]["report"]["dims"]["lie_cs_star"], 3);
}

#[test]
fn oc_on_noisy_model_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "q.json", DEPHASED_QUBIT);
    assert_eq!(dfsctl(&["test", "--model", m.to_str().unwrap(), "--standard", "esc"]).status.code(), Some(2));
}

#[test]
fn non_invariant_projection_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "p.json", LEAKY_PAIR);
    let m = m.to_str().unwrap();
    let v = json(&dfsctl(&["commutant", "--model", m]));
    assert_eq!(orders(&v), vec![2, 2]);
    let out = dfsctl(&["difs", "--model", m, "--sector", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(dfsctl(&["test", "--model", m, "--sector", "1"]).status.code(), Some(3));
}

#[test]
fn simulate_closed_zero_field_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "c.json", CLOSED_QUBIT);
    let csv = dir.path().join("t.csv");
    let summary = dir.path().join("s.json");
    let out = dfsctl(&[
        "simulate", "--model", m.to_str().unwrap(), "--sector", "1", "--field", "zero", "--horizon", "0.5",
        "--samples", "4", "--out", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,v0,v1,v2,v3,leak_p,leak_nc");
    assert_eq!(lines.len(), 6);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    let r = &s["result"];
    assert!((r["initial_norm"].as_f64().unwrap() - r["final_norm"].as_f64().unwrap()).abs() < 1e-8);
}

#[test]
fn ion_pipeline_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("ion.json");
    assert!(dfsctl(&["ion-model", "--out", m.to_str().unwrap()]).status.success());
    let m = m.to_str().unwrap();
    let v = json(&dfsctl(&["commutant", "--model", m]));
    assert_eq!(v["result"]["nc_dim"], 280);
    assert_eq!(orders(&v), vec![2, 2, 8, 8, 12]);
    let v = json(&dfsctl(&["difs", "--model", m, "--sector", "3"]));
    assert_eq!(v["result"]["n_eff"], 4);
    assert_eq!(v["result"]["drift_invariant"], true);

    let csv = dir.path().join("good.csv");
    let summary = dir.path().join("good.json");
    let out = dfsctl(&[
        "simulate", "--model", m, "--sector", "3", "--samples", "20", "--columns", "0",
        "--out", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(s["result"]["max_leak_p"].as_f64().unwrap() <= 1e-7);

    let out = dfsctl(&[
        "simulate", "--model", m, "--sector", "3", "--field", "constant", "--u", "1,0,0,0,0,0,0",
        "--samples", "20", "--columns", "0", "--out", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(s["result"]["max_leak_p"].as_f64().unwrap() > 1e-3);
}

#[test]
fn derived_code_round_trips_through_u_star_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "c.json", CLOSED_QUBIT);
    let m = m.to_str().unwrap();
    let code = dir.path().join("code.json");
    let out = dfsctl(&["codes", "--model", m, "--sector", "1", "--u-star", "random", "--seed", "4", "--out", code.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&dfsctl(&["codes", "--model", m, "--sector", "1", "--u-star", code.to_str().unwrap(), "--seed", "4"]));
    let first: Value = serde_json::from_str(&std::fs::read_to_string(&code).unwrap()).unwrap();
    assert_eq!(v["result"]["u_star"], first["result"]["u_star"]);
    assert_eq!(v["result"]["order"], 2);
}
