use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenrep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenrep"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = scenrep(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

/// A scratch directory holding `s.jsonl` with `n` synthetic LVD scenarios.
fn workspace(n: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--n", &n.to_string(), "--seed", "3", "-o", "s.jsonl"]);
    dir
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["synth", "--category", "lvd", "--n", "1000", "--seed", "7"];
    let a = ok(dir.path(), &args);
    assert_eq!(a, ok(dir.path(), &args));
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 1000);
    assert_ne!(a, ok(dir.path(), &["synth", "--n", "1000", "--seed", "8"]));
}

#[test]
fn seed_is_echoed_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = scenrep(dir.path(), &["synth", "--n", "2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed=0"));
}

#[test]
fn evaluate_with_generated_equal_to_test_has_negative_sr() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--n", "40", "--seed", "1", "--format", "csv", "-o", "z.csv"]);
    ok(dir.path(), &["synth", "--n", "60", "--seed", "2", "--format", "csv", "-o", "x.csv"]);
    let report = json(&ok(dir.path(), &["evaluate", "-g", "z.csv", "-t", "z.csv", "-x", "x.csv", "--beta", "0.5"]));
    let (w_test, w_train, sr) =
        (report["w_test"].as_f64().unwrap(), report["w_train"].as_f64().unwrap(), report["sr"].as_f64().unwrap());
    assert!(w_test.abs() < 1e-12);
    assert!(w_train > 0.0);
    assert!((sr + 0.5 * w_train).abs() < 1e-12);
}

#[test]
fn fit_then_generate_round_trips_the_layout() {
    let dir = workspace(120);
    ok(dir.path(), &["fit", "-i", "s.jsonl", "--d", "3", "-o", "m.json"]);
    let model = json(&std::fs::read(dir.path().join("m.json")).unwrap());
    assert_eq!(model["method"], "svd+kde+dep");
    assert_eq!(model["basis"]["singular_values"].as_array().unwrap().len(), 3);
    let csv = String::from_utf8(ok(dir.path(), &["generate", "-m", "m.json", "--n-w", "25"])).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 53);
    assert_eq!(lines.count(), 25);
    let components = String::from_utf8(ok(dir.path(), &["fit", "-i", "s.jsonl", "--d", "2", "--format", "csv"])).unwrap();
    assert!(components.starts_with("column,mean,u1,u2\n"));
}

#[test]
fn select_d_writes_json_and_curve_csv() {
    let dir = workspace(100);
    let args = [
        "select-d", "-i", "s.jsonl", "--repeats", "2", "--n-w", "50", "--d-max", "3", "--bootstrap", "100",
        "--curve-csv", "curve.csv",
    ];
    let curve = json(&ok(dir.path(), &args));
    let labels: Vec<&str> = curve["points"].as_array().unwrap().iter().map(|p| p["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["resample", "d=1", "d=2", "d=3"]);
    assert_eq!(curve["runs"].as_array().unwrap().len(), 8);
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn compare_ranks_every_requested_method() {
    let dir = workspace(100);
    let args = [
        "compare", "-i", "s.jsonl", "--repeats", "2", "--n-w", "50", "--d", "2", "--bootstrap", "100", "--methods",
        "svd+kde+dep,fixed+gauss+indep,resample",
    ];
    let report = json(&ok(dir.path(), &args));
    let mut ranking: Vec<&str> = report["ranking"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    ranking.sort();
    assert_eq!(ranking, ["fixed+gauss+indep", "resample", "svd+kde+dep"]);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["evaluate", "-g", "a.csv", "-t", "b.csv", "-x", "c.csv"][..],
        &["synth", "--category", "custom", "--n", "3"],
        &["synth", "--n", "0"],
        &["no-such-command"],
        &["fit", "-i", "s.jsonl", "--method", "resample"],
    ] {
        let out = scenrep(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        let diag: Vec<&str> = stderr.lines().filter(|l| l.starts_with("scenrep: error ")).collect();
        assert_eq!(diag.len(), 1, "{stderr}");
        assert!(diag[0].contains(" kind=") && diag[0].contains(" exit=1 "));
    }
}

#[test]
fn malformed_scenarios_are_reported_by_kind() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.jsonl"),
        r#"{"id":"a","t0":1.0,"t1":0.0,"category":"LVD","signals":{},"statics":{}}"#,
    )
    .unwrap();
    let out = scenrep(dir.path(), &["fit", "-i", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=negative_duration"));
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_scenrep"))
        .current_dir(dir.path())
        .env("SCENREP_THREADS", "0")
        .args(["synth", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let capped = Command::new(env!("CARGO_BIN_EXE_scenrep"))
        .current_dir(dir.path())
        .env("SCENREP_THREADS", "1")
        .args(["synth", "--n", "2"])
        .output()
        .unwrap();
    assert!(capped.status.success());
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = scenrep(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("calibrate-beta"));
}
