use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use leximin::apps::load_instance;
use leximin::model::Outcome;
use serde_json::Value;
use tempfile::TempDir;

const GIVEAWAY: &str = r#"{"kind": "giveaway", "sizes": [2, 2, 3], "capacity": 4}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn leximin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leximin")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn sorted(v: &Value) -> Vec<f64> {
    let mut s: Vec<f64> = v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    s.sort_by(f64::total_cmp);
    s
}

#[test]
fn solve_matches_oracle_on_giveaway() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "g.json", GIVEAWAY);
    let solved = leximin(&["--instance", path(&inst), "--solver", "knapsack-exact"]);
    assert!(solved.status.success(), "{}", String::from_utf8_lossy(&solved.stderr));
    let oracle = leximin(&["--instance", path(&inst), "--mode", "oracle"]);
    assert!(oracle.status.success());
    let (a, b) = (sorted(&json(&solved)["expected"]), sorted(&json(&oracle)["expected"]));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-5, "{a:?} vs {b:?}");
    }
}

#[test]
fn result_document_is_a_feasible_lottery() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "g.json", GIVEAWAY);
    let out = leximin(&["--instance", path(&inst), "--solver", "knapsack-fptas", "--fptas-eps", "0.2"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    let instance = load_instance(GIVEAWAY).unwrap();
    let mut total = 0.0;
    for entry in doc["lottery"].as_array().unwrap() {
        total += entry["probability"].as_f64().unwrap();
        let outcome: Outcome = serde_json::from_value(entry["outcome"].clone()).unwrap();
        assert!(instance.is_feasible(&outcome));
    }
    assert!((total - 1.0).abs() <= 1e-7);
}

#[test]
fn same_config_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "e.json", r#"{"kind": "explicit", "agents": 2, "states": [[10, 10], [0, 1000], [3, 4]]}"#);
    let args = ["--instance", path(&inst), "--success-prob", "0.7", "--seed", "5"];
    let first = leximin(&args);
    let second = leximin(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn verify_accepts_the_oracle_and_rejects_a_bad_lottery() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "g.json", GIVEAWAY);
    let oracle = dir.path().join("oracle.json");
    assert!(leximin(&["--instance", path(&inst), "--mode", "oracle", "--out", path(&oracle)]).status.success());
    let ok = leximin(&["--instance", path(&inst), "--mode", "verify", "--candidate", path(&oracle)]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["pass"], true);

    let lone = write(
        &dir,
        "lone.json",
        r#"{"lottery": [{"probability": 1.0, "outcome": {"type": "admitted", "groups": [2]}}]}"#,
    );
    let bad = leximin(&["--instance", path(&inst), "--mode", "verify", "--candidate", path(&lone)]);
    assert_eq!(bad.status.code(), Some(5));
    assert_eq!(json(&bad)["pass"], false);
}

#[test]
fn compare_reports_both_vectors() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", r#"{"kind": "allocation", "goods": 2, "values": [[1, 2], [2, 1]]}"#);
    let out = leximin(&["--instance", path(&inst), "--mode", "compare", "--solver", "greedy-additive"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["pass"], true);
    assert_eq!(sorted(&doc["optimum_sorted"]).len(), 2);
    assert!(doc["pipeline"]["lottery"].is_array());
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = TempDir::new().unwrap();
    let malformed = write(&dir, "m.json", "{not json");
    assert_eq!(leximin(&["--instance", path(&malformed)]).status.code(), Some(2));

    let oversized = write(&dir, "o.json", r#"{"kind": "giveaway", "sizes": [5, 1], "capacity": 4}"#);
    assert_eq!(leximin(&["--instance", path(&oversized)]).status.code(), Some(3));

    let inst = write(&dir, "g.json", GIVEAWAY);
    let wrong_solver = leximin(&["--instance", path(&inst), "--solver", "greedy-additive"]);
    assert_eq!(wrong_solver.status.code(), Some(3));

    let unseeded = leximin(&["--instance", path(&inst), "--success-prob", "0.5"]);
    assert_eq!(unseeded.status.code(), Some(2));

    let no_candidate = leximin(&["--instance", path(&inst), "--mode", "verify"]);
    assert_eq!(no_candidate.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_candidate.stderr).contains("--candidate"));
}

#[test]
fn shipped_instances_pass_compare() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances");
    for (file, solver) in [
        ("giveaway.json", "knapsack-exact"),
        ("budget.json", "knapsack-fptas"),
        ("allocation.json", "greedy-additive"),
        ("coverage.json", "greedy-submodular"),
        ("fixture.json", "exhaustive"),
    ] {
        let inst = root.join(file);
        let out = leximin(&["--instance", path(&inst), "--mode", "compare", "--solver", solver]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
