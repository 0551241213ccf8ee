//! End-to-end runs of the `rnnhl` binary.

use std::path::Path;
use std::process::{Command, Output};

fn rnnhl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnnhl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn critical_c_prints_c0_and_x0() {
    let dir = tempfile::tempdir().unwrap();
    let o = rnnhl(dir.path(), &["critical-c"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!((value("c0 =") + 123.7215).abs() < 5e-4);
    assert!((value("x0 =") + 1.27846).abs() < 1e-5);
    assert!(!dir.path().join("rnnhl-out").exists());
}

#[test]
fn simulate_is_reproducible_given_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = rnnhl(dir.path(), &["simulate", "--set", "system.c=-3", "--seed", "5", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = read_json(&dir.path().join("a/manifest.json"));
    let b = read_json(&dir.path().join("b/manifest.json"));
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["config_digest"], b["config_digest"]);
    let csv = std::fs::read_to_string(dir.path().join("a/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x_1,x_2,w\n"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // Converged onto the unique equilibrium on the diagonal.
    assert!((last[1] - last[2]).abs() < 1e-6);

    let other = rnnhl(dir.path(), &["simulate", "--set", "system.c=-3", "--seed", "6", "--out", "c"]);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(read_json(&dir.path().join("c/manifest.json"))["outputs"], a["outputs"]);
}

#[test]
fn invalid_decay_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"system": {"kind": "network", "spec": {"n": 2, "a": [0.0, 1.0], "edges": [{"i": 1, "j": 0, "b": 1.0, "c": -3.0}]}}}"#,
    )
    .unwrap();
    let o = rnnhl(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a[0] must be > 0"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["equilibria", "--set", "system.c=0"],
        vec!["equilibria", "--set", "unknown_section=1"],
        vec!["simulate", "--config", "missing.json"],
        vec!["sweep", "--set", "sweep.points=1"],
        vec!["verify", "no-such-suite"],
        vec!["simulate", "--jobs", "0"],
    ] {
        let o = rnnhl(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn equilibria_at_strong_anti_hebbian_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = rnnhl(dir.path(), &["equilibria", "--set", "system.c=-150", "--out", "eq", "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = read_json(&dir.path().join("eq/equilibria.json"));
    let kinds: Vec<&str> = doc["equilibria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["stability"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["stable", "unstable", "stable"]);
    assert_eq!(doc["equilibria"][1]["symmetry_tag"], "on_plane_l");
}

#[test]
fn certified_motif_reports_the_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("motif.json");
    std::fs::write(
        &cfg,
        r#"{"system": {"kind": "network", "spec": {"n": 2, "a": [2.0, 2.0], "edges": [
            {"i": 1, "j": 0, "b": 1.0, "c": 0.5}, {"i": 0, "j": 1, "b": 1.0, "c": -0.5}]}}}"#,
    )
    .unwrap();
    let o = rnnhl(dir.path(), &["equilibria", "--config", cfg.to_str().unwrap(), "--out", "m"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = read_json(&dir.path().join("m/equilibria.json"));
    assert_eq!(doc["count"], 1);
    assert_eq!(doc["contraction_certificate"]["verdict"], "unique_guaranteed");
    assert!(dir.path().join("m/network.json").exists());
}

#[test]
fn interconnected_preset_has_a_52_dimensional_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k5.json");
    std::fs::write(
        &cfg,
        r#"{"system": {"kind": "generated", "topology": {"kind": "interconnected", "k": 5}, "c": -300}}"#,
    )
    .unwrap();
    let o = rnnhl(dir.path(), &["equilibria", "--config", cfg.to_str().unwrap(), "--out", "k5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = read_json(&dir.path().join("k5/equilibria.json"));
    assert!(doc["count"].as_u64().unwrap() >= 1);
    assert_eq!(doc["equilibria"][0]["eigenvalues"].as_array().unwrap().len(), 52);
}

#[test]
fn sweep_writes_diagram_and_refined_transition() {
    let dir = tempfile::tempdir().unwrap();
    let o = rnnhl(dir.path(), &["sweep", "--set", "sweep.points=30", "--out", "sw"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sw/diagram.csv")).unwrap();
    assert!(csv.starts_with("c,branch_id,x_1,x_2,w,stability\n"));
    let doc = read_json(&dir.path().join("sw/transitions.json"));
    let t = &doc["transitions"][0];
    assert_eq!((t["count_before"].as_u64(), t["count_after"].as_u64()), (Some(3), Some(1)));
    assert!((t["refined_c"].as_f64().unwrap() + 123.7215).abs() < 1e-3);
    let manifest = read_json(&dir.path().join("sw/manifest.json"));
    let names: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["diagram.csv", "transitions.json"]);
}

#[test]
fn config_digest_is_independent_of_key_order() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.json"), r#"{"seed": 2, "system": {"kind": "reduced", "c": -20}}"#).unwrap();
    std::fs::write(dir.path().join("b.json"), r#"{"system": {"c": -20, "kind": "reduced"}, "seed": 2}"#).unwrap();
    for name in ["a", "b"] {
        let o = rnnhl(dir.path(), &["simulate", "--config", &format!("{name}.json"), "--out", name]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(
        read_json(&dir.path().join("a/manifest.json"))["config_digest"],
        read_json(&dir.path().join("b/manifest.json"))["config_digest"]
    );
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = rnnhl(dir.path(), &["verify", "pitchfork", "--out", "v"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS criterion  2 [pitchfork]"));
    let report = read_json(&dir.path().join("v/verify_report.json"));
    assert_eq!(report["passed"], true);

    let o = rnnhl(dir.path(), &["verify", "global-stability", "--out", "g"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_catches_a_corrupted_sigmoid() {
    let dir = tempfile::tempdir().unwrap();
    let o = rnnhl(dir.path(), &["verify", "all", "--fail-fast", "--sigmoid-gain", "1.1", "--out", "bad"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("failed criteria: pitchfork"), "{}", stderr(&o));
    let report = read_json(&dir.path().join("bad/verify_report.json"));
    assert_eq!(report["passed"], false);
    assert_eq!(report["failed"][0], "pitchfork");
}
