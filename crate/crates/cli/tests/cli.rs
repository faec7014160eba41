use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_realizability")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report: Value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("report is not JSON ({e}):\n{stdout}"));
    (out.status.code().unwrap(), report)
}

fn gen(dir: &Path, extra: &[&str]) {
    let mut args = vec!["gen", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, _) = run(&args);
    assert_eq!(code, 0);
}

#[test]
fn gen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--seed", "7", "--atoms", "3", "--grid", "4", "--N", "4"];
    gen(a.path(), &flags);
    gen(b.path(), &flags);
    for f in ["ensemble.json", "moments.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn generated_field_moments_pass_checks() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &["--seed", "7", "--atoms", "3", "--grid", "4", "--N", "4"]);
    let m = dir.path().join("moments.json");
    let m = m.to_str().unwrap();
    let (code, r) = run(&["check", "psd", "--moments", m, "--t", "2"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["result"]["report"]["verdict"], "psd");
    let (code, r) = run(&["check", "radon", "--moments", m, "--t", "1"]);
    assert_eq!(code, 0, "{r}");
    let (code, _) = run(&["check", "bounded-density", "--moments", m, "--t", "1", "--c", "1.0"]);
    assert_eq!(code, 0);
}

#[test]
fn generated_point_moments_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &["--point", "--d", "2", "--atoms", "2", "--N", "3"]);
    let m = dir.path().join("moments.json");
    let text = std::fs::read_to_string(&m).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["d"], 2);
    assert_eq!(v["values"].as_array().unwrap().len(), 10);
    let (code, _) = run(&["check", "psd", "--moments", m.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, r) = run(&["check", "semialgebraic", "--moments", m.to_str().unwrap(), "--spec", r#"{"box":[[0,1],[0,1]]}"#]);
    assert_eq!(code, 0, "{r}");
}

#[test]
fn classify_superfactorial_growth() {
    let (code, r) = run(&["qa", "classify", "--seq", r#"{"rule":{"name":"factorial_power","params":{"p":1.5}}}"#, "--n", "200"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["classification"], "not_quasi_analytic");
}

#[test]
fn density_violation_exits_one() {
    let m = r#"{"grid":{"d":1,"g":4,"h":0.25},"atoms":[{"w":1,"eta":[0,0.0375,0,0]}],"N":3,"density":true}"#;
    let (code, r) = run(&["check", "bounded-density", "--moments", m, "--c", "0.1"]);
    assert_eq!(code, 1);
    assert_eq!(r["result"]["first_failure"], "gamma[1] cell[1]");
}

#[test]
fn perturbed_moments_are_disproved() {
    let dir = tempfile::tempdir().unwrap();
    let m = r#"{"d":1,"N":2,"values":[{"alpha":[0],"m":1},{"alpha":[1],"m":1},{"alpha":[2],"m":1}]}"#;
    let out = dir.path().join("p.json");
    let (code, _) = run(&["oracle", "perturb", "--moments", m, "--at", "[2]", "--eps", "-0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, r) = run(&["check", "psd", "--moments", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(r["result"]["report"]["verdict"], "not_psd");
}

#[test]
fn fit_verdicts() {
    let m = r#"{"d":1,"N":2,"values":[{"alpha":[0],"m":1},{"alpha":[1],"m":0.5},{"alpha":[2],"m":0.25}]}"#;
    let (code, r) = run(&["oracle", "fit", "--moments", m, "--candidates", "[[0],[0.5],[1]]", "--t", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["status"], "feasible");
    let m = r#"{"d":1,"N":1,"values":[{"alpha":[0],"m":1},{"alpha":[1],"m":2}]}"#;
    let (code, _) = run(&["oracle", "fit", "--moments", m, "--candidates", "[[0],[1]]", "--t", "1"]);
    assert_eq!(code, 1);
}

#[test]
fn sobolev_commands() {
    let k = r#"{"k1":0,"k2":{"name":"poly_even","params":{"coeffs":[2,2]}}}"#;
    let (code, r) = run(&["sobolev", "condition-d", "--k", k]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["k_prime"]["k1"], 1);
    let k = r#"{"k1":1,"k2":{"name":"poly_even","params":{"coeffs":[1,1]}}}"#;
    let seq = r#"{"rule":{"name":"factorial_power","params":{"p":2}}}"#;
    let (code, r) = run(&["sobolev", "bound", "--y", "2", "--p", "3", "--k", k, "--seq", seq]);
    assert_eq!(code, 0, "{r}");
    let (code, _) = run(&["sobolev", "norm", "--f", r#"{"box":[[0,0.4]],"h":0.1,"values":[0,1,2,1,0]}"#, "--k", k]);
    assert_eq!(code, 0);
    let qa = r#"{"rule":{"name":"factorial_power","params":{"p":1}}}"#;
    let (code, _) = run(&["sobolev", "bound", "--y", "0", "--p", "0", "--k", k, "--seq", qa]);
    assert_eq!(code, 1);
}

#[test]
fn dominate_and_sums() {
    let (code, r) = run(&["qa", "dominate", "--family", "geometric", "--param", "0.5"]);
    assert_eq!(code, 0, "{r}");
    let (code, r) = run(&["qa", "sums", "--seq", r#"{"rule":{"name":"factorial_power","params":{"p":1}}}"#, "--n", "200"]);
    assert_eq!(code, 0);
    assert!(r["result"]["totals"].is_array());
    let (code, _) = run(&["qa", "regularize", "--seq", r#"{"terms":[1,3,2,8,5]}"#, "--n", "4"]);
    assert_eq!(code, 0);
}

#[test]
fn input_errors_exit_three_with_json() {
    let (code, r) = run(&["check", "psd", "--moments", "{\"d\": 1,\n \"N\": }"]);
    assert_eq!(code, 3);
    assert!(r["error"].as_str().unwrap().contains("line 2"));
    let (code, r) = run(&["check", "psd"]);
    assert_eq!(code, 3);
    assert_eq!(r["status"], "input_error");
    let (code, _) = run(&["check", "psd", "--moments", "/nonexistent/m.json"]);
    assert_eq!(code, 3);
    let (code, _) = run(&["frobnicate"]);
    assert_eq!(code, 3);
}
