use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use uniform_rule::io::{config_from_json, config_to_json, read_json_file};
use uniform_rule::{AuditConfig, Rational};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uniform-rule"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn economy_file(dir: &tempfile::TempDir, body: &str) -> String {
    let path = dir.path().join("economy.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn scalar(v: &Value) -> (i64, i64) {
    (v["num"].as_i64().unwrap(), v["den"].as_i64().unwrap())
}

#[test]
fn solve_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let e = economy_file(&dir, r#"{"peaks":[2,4,6],"omega":9}"#);
    let out = run(&["solve", "uniform", &e]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(2, 3.5, 3.5)"), "{text}");
    assert!(text.contains("demand"));
}

#[test]
fn solve_json_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let e = economy_file(&dir, r#"{"peaks":[2,4,6],"omega":9}"#);
    let out = run(&["--json", "solve", "uniform", &e]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let a = &v["allocation"]["amounts"];
    assert_eq!(scalar(&a["1"]), (2, 1));
    assert_eq!(scalar(&a["2"]), (7, 2));
    assert_eq!(scalar(&a["3"]), (7, 2));
    assert_eq!(scalar(&v["lambda"]), (7, 2));
}

#[test]
fn solve_supply_side() {
    let dir = tempfile::tempdir().unwrap();
    let e = economy_file(&dir, r#"{"peaks":[1,2,3],"omega":9}"#);
    let out = run(&["--json", "solve", "uniform", &e]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["branch"], "supply");
    for id in ["1", "2", "3"] {
        assert_eq!(scalar(&v["allocation"]["amounts"][id]), (3, 1));
    }
}

#[test]
fn serial_dictator_with_order() {
    let dir = tempfile::tempdir().unwrap();
    let e = economy_file(&dir, r#"{"peaks":[2,4,6],"omega":9}"#);
    let out = run(&["--json", "solve", "serial_dictator_fixed", &e, "--order", "3,2,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let a = &v["allocation"]["amounts"];
    assert_eq!(scalar(&a["3"]), (6, 1));
    assert_eq!(scalar(&a["2"]), (3, 1));
    assert_eq!(scalar(&a["1"]), (0, 1));
}

#[test]
fn option_set_closed_form() {
    let out = run(&[
        "--json", "option-set", "uniform", "--pref", "3", "--omega", "9", "--n", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "interval");
    assert_eq!(scalar(&v["lo"]), (3, 1));
    assert_eq!(scalar(&v["hi"]), (3, 1));
    assert_eq!(v["provenance"], "analytic");

    let out = run(&[
        "--json", "option-set", "uniform", "--pref", "1", "--omega", "9", "--n", "3",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(scalar(&v["lo"]), (1, 1));
    assert_eq!(scalar(&v["hi"]), (3, 1));
}

#[test]
fn option_set_enumerated() {
    let out = run(&[
        "option-set", "uniform", "--pref", "2", "--omega", "4", "--n", "2", "--enumerate",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_input_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let e = economy_file(&dir, "{not json");
    assert_eq!(run(&["solve", "uniform", &e]).status.code(), Some(4));
    let e = economy_file(&dir, r#"{"peaks":[1,-2],"omega":3}"#);
    assert_eq!(run(&["solve", "uniform", &e]).status.code(), Some(4));
    assert_eq!(run(&["solve", "uniform", "/nonexistent/e.json"]).status.code(), Some(4));
    assert_eq!(run(&["solve"]).status.code(), Some(4));
}

#[test]
fn unknown_names_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let e = economy_file(&dir, r#"{"peaks":[1,2],"omega":3}"#);
    assert_eq!(run(&["solve", "nope", &e]).status.code(), Some(5));
    assert_eq!(run(&["audit", "uniform", "nope"]).status.code(), Some(5));
}

#[test]
fn audit_exit_codes() {
    let out = run(&["audit", "uniform", "efficiency"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["--json", "audit", "serial_dictator_fixed", "edg"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdicts"][0]["status"], "fail");
    assert_eq!(run(&["audit", "equal_division", "efficiency"]).status.code(), Some(2));
}

#[test]
fn tiny_budget_exits_3() {
    let out = run(&["--budget", "1", "audit", "uniform", "nom"]);
    assert_eq!(out.status.code(), Some(3));
}

// phi_bar admits an exact obvious manipulation with two agents, so the
// matrix carries one cell beyond the designated failures.
#[test]
fn independence_reports_phi_bar_nom() {
    let out = run(&["--json", "independence"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let mismatches = v["mismatches"].as_array().unwrap();
    assert_eq!(mismatches.len(), 1, "{mismatches:?}");
    assert_eq!(mismatches[0]["rule"], "phi_bar");
    assert_eq!(mismatches[0]["axiom"], "nom");
}

#[test]
fn shipped_config_is_the_default() {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", "default.json"]
        .iter()
        .collect();
    let v = read_json_file(&path).unwrap();
    let cfg: AuditConfig<Rational> = config_from_json(&v).unwrap();
    assert_eq!(config_to_json(&cfg), config_to_json(&AuditConfig::<Rational>::default()));
}
