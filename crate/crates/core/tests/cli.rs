//! End-to-end checks of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn sqrteps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqrteps")).args(args).output().expect("spawn sqrteps")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn test_command_reports_p_value() {
    let dir = tempdir().unwrap();
    let labels = dir.path().join("labels.txt");
    fs::write(&labels, "0\n1\n\n1\n1\n").unwrap();
    let o = sqrteps(&["test", p(&labels), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("p_value: 0.7071067811865476"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("test.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["count_le"], 1);

    fs::write(&labels, "3.5\n").unwrap();
    let o = sqrteps(&["test", p(&labels)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("p_value: 1\n"));
}

#[test]
fn test_command_rejects_bad_input() {
    let dir = tempdir().unwrap();
    let labels = dir.path().join("labels.txt");
    fs::write(&labels, "0\n1\nnope\n").unwrap();
    let o = sqrteps(&["test", p(&labels)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = sqrteps(&["test", p(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(2));

    let o = sqrteps(&["test", p(&labels), "--tv-slack", "-1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = sqrteps(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_with_zero_steps_writes_one_row() {
    let dir = tempdir().unwrap();
    let o = sqrteps(&["run", "--grid", "6x6", "--districts", "2", "--steps", "0", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("step,label\n0,"));
    assert!(dir.path().join("run.json").exists());
    assert!(dir.path().join("final-districting.json").exists());
}

#[test]
fn runs_are_reproducible() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    for dir in [&a, &b] {
        let o = sqrteps(&[
            "run", "--grid", "8x8", "--districts", "3", "--steps", "3000", "--seed", "17", "--label", "mm", "--out",
            p(dir.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["labels.csv", "run.json", "final-districting.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn generate_then_run_from_files() {
    let dir = tempdir().unwrap();
    let o = sqrteps(&["generate", "--grid", "7x5", "--districts", "3", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let geo = dir.path().join("geography.json");
    let plan = dir.path().join("districting.json");
    let out = dir.path().join("run");
    let o = sqrteps(&[
        "run", "--geography", p(&geo), "--districting", p(&plan), "--districts", "3", "--steps", "500", "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("labels.csv")).unwrap().lines().count(), 502);
}

#[test]
fn domain_errors_exit_3() {
    let dir = tempdir().unwrap();
    let geo = dir.path().join("geography.json");
    // Well-formed JSON whose adjacency names a precinct that does not exist.
    fs::write(
        &geo,
        r#"{"format": 1, "precincts": [{"id": "a", "area": 1.0, "exterior_boundary_length": 4.0,
            "population": 10, "votes_dem": 1, "votes_rep": 1, "votes_total": 2}],
            "adjacency": [{"a": "a", "b": "ghost", "shared_length": 1.0}]}"#,
    )
    .unwrap();
    let o = sqrteps(&["run", "--geography", p(&geo), "--steps", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    // A start that violates the population tolerance.
    let o = sqrteps(&["run", "--grid", "5x5", "--districts", "2", "--pop-tol", "0.0001", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn malformed_geography_json_exits_2() {
    let dir = tempdir().unwrap();
    let geo = dir.path().join("geography.json");
    fs::write(&geo, r#"{"precincts": [], "adjacency": []}"#).unwrap();
    let o = sqrteps(&["run", "--geography", p(&geo), "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bound_verification_passes() {
    let o = sqrteps(&["experiment", "bound-verify", "--chains", "5", "--k-max", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("result: PASS"));
}

#[test]
fn tightness_report_contains_exact_probability() {
    let dir = tempdir().unwrap();
    let args = ["experiment", "tightness", "--k", "2", "--trials", "4000", "--positions", "1000", "--out", p(dir.path())];
    let o = sqrteps(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let first = fs::read(dir.path().join("tightness.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["trials"][0]["exact"], 0.25);
    assert_eq!(doc["provenance"]["generator_id"], sqrteps::rng::GENERATOR_ID);

    let o = sqrteps(&args);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("tightness.json")).unwrap(), first);
}

#[test]
fn experiment_errors() {
    let o = sqrteps(&["experiment", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));

    // Too few steps for any detection: the power check fails.
    let o = sqrteps(&["experiment", "planted", "--steps", "4", "--seeds", "3", "--burn-in", "10"]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert!(stdout(&o).contains("result: FAIL"));
}
