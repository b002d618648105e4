//! Golden-file checks for the solve command: byte-stable reports for three
//! pinned instances, each cross-checked against the brute-force oracle so
//! the pinned output is known-correct, not merely stable.

use spherical_cluster::{brute_force_min, build_problem, linalg, objective, Dataset64};
use std::path::PathBuf;
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run_solve(input: &str, eta: &str, seed: &str) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sccenter"))
        .current_dir(crate_dir())
        .args(["solve", "--input", input, "--eta", eta, "--seed", seed])
        .output()
        .expect("run sccenter");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn load_dataset(rel: &str) -> Dataset64 {
    let raw = std::fs::read_to_string(crate_dir().join(rel)).unwrap();
    let pts: Vec<Vec<f64>> = raw
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|t| t.trim().parse().unwrap()).collect())
        .collect();
    Dataset64::new(pts).unwrap()
}

fn check_against_oracle(rel_input: &str, eta: f64, produced: &str) {
    let doc: serde_json::Value = serde_json::from_str(produced).unwrap();
    let center: Vec<f64> = doc["center"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let dataset = load_dataset(rel_input);
    let diam = dataset.diameter();
    let problem = build_problem(dataset, eta).unwrap();
    let oracle = brute_force_min(&problem, 1e-6 * diam).unwrap();
    assert!(
        linalg::dist(&center, &oracle) <= 1e-5 * diam,
        "report center {center:?} disagrees with oracle {oracle:?}"
    );
    let f = doc["f_value"].as_f64().unwrap();
    let f_oracle = objective(&problem, &oracle);
    assert!((f - f_oracle).abs() <= 1e-8 * (1.0 + f_oracle));
}

fn golden(name: &str, produced: &str) {
    let path = crate_dir().join("tests/golden").join(name);
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        produced, expected,
        "report drifted from the golden file {name}; if the change is intended, regenerate it"
    );
}

#[test]
fn golden_two_point() {
    let produced = run_solve("tests/data/two_point.csv", "0.4", "0");
    check_against_oracle("tests/data/two_point.csv", 0.4, &produced);
    golden("solve_two_point.json", &produced);
}

#[test]
fn golden_tiny_eta_limit() {
    let produced = run_solve("tests/data/five_points.csv", "0.000001", "0");
    // the near-zero limit keeps the center at the barycenter
    let doc: serde_json::Value = serde_json::from_str(&produced).unwrap();
    let center: Vec<f64> = doc["center"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let dataset = load_dataset("tests/data/five_points.csv");
    let mean = dataset.mean();
    assert!(linalg::dist(&center, &mean) <= 1e-3 * dataset.diameter());
    check_against_oracle("tests/data/five_points.csv", 0.000001, &produced);
    golden("solve_tiny_eta.json", &produced);
}

#[test]
fn golden_seeded_uniform_instance() {
    let produced = run_solve("tests/data/uniform50_2d.csv", "0.5", "7");
    check_against_oracle("tests/data/uniform50_2d.csv", 0.5, &produced);
    golden("solve_uniform50.json", &produced);
}
