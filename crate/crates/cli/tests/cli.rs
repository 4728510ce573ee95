use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn strata(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strata"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = strata(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn small_spec(dir: &Path) -> String {
    let path = p(dir, "spec.json");
    fs::write(&path, r#"{"seed": 4, "n_bays": 1, "n_shelf_rows": 3, "n_distractors": 5}"#).unwrap();
    path
}

#[test]
fn stage_by_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = small_spec(d);
    ok(&["gen", "--spec", &spec, "--out", &p(d, "scene.json"), "--render", &p(d, "scene.pgm")]);
    ok(&["extract", "--image", &p(d, "scene.pgm"), "--out", &p(d, "extracted.json")]);
    ok(&[
        "relate",
        "--scene",
        &p(d, "scene.json"),
        "--out",
        &p(d, "graph.json"),
        "--premises",
        &p(d, "premises.nal"),
    ]);
    ok(&[
        "reason",
        "--graph",
        &p(d, "graph.json"),
        "--foa",
        "--out",
        &p(d, "labels.json"),
        "--covers",
        &p(d, "covers.json"),
        "--beliefs",
        &p(d, "beliefs.jsonl"),
    ]);
    let out = ok(&[
        "eval",
        "--pred",
        &p(d, "labels.json"),
        "--truth",
        &p(d, "scene.json"),
        "--out",
        &p(d, "metrics.json"),
        "--table",
    ]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("overall accuracy"));
    assert!(table.contains("100.00%"));
    ok(&["export", "--graph", &p(d, "graph.json"), "--dot", &p(d, "graph.dot")]);
    assert!(fs::read_to_string(d.join("graph.dot")).unwrap().starts_with("digraph"));
    let premises = fs::read_to_string(d.join("premises.nal")).unwrap();
    assert!(premises.lines().all(|l| l.starts_with("<(*,") && l.ends_with('%')));
}

#[test]
fn no_foa_matches_foa_when_premises_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = small_spec(d);
    ok(&["gen", "--spec", &spec, "--out", &p(d, "scene.json")]);
    ok(&["relate", "--scene", &p(d, "scene.json"), "--out", &p(d, "graph.json")]);
    let edges = fs::read_to_string(d.join("graph.json")).unwrap().matches("\"relation\"").count();
    assert!(edges <= 600, "{edges} edges exceed the default capacity");
    ok(&["reason", "--graph", &p(d, "graph.json"), "--foa", "--out", &p(d, "foa.json")]);
    ok(&["reason", "--graph", &p(d, "graph.json"), "--no-foa", "--out", &p(d, "whole.json")]);
    assert_eq!(fs::read(d.join("foa.json")).unwrap(), fs::read(d.join("whole.json")).unwrap());
}

#[test]
fn pipeline_is_deterministic_and_self_contained() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = p(d, "run.json");
    fs::write(&cfg, r#"{"seed": 11, "scene": {"relation_noise": 0.05}}"#).unwrap();
    for run in ["a", "b"] {
        ok(&["pipeline", "--config", &cfg, "--out-dir", &p(d, run)]);
    }
    for f in ["labels.json", "metrics.json", "graph.json", "covers.json", "table.txt"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    // eval over the run's own files reproduces its metrics
    let a = d.join("a");
    ok(&[
        "eval",
        "--pred",
        &p(&a, "labels.json"),
        "--truth",
        &p(&a, "scene.json"),
        "--out",
        &p(d, "again.json"),
    ]);
    assert_eq!(fs::read(d.join("again.json")).unwrap(), fs::read(a.join("metrics.json")).unwrap());
}

#[test]
fn eval_with_mismatched_ids_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("pred.json"), r#"{"x": "shelf"}"#).unwrap();
    fs::write(d.join("truth.json"), r#"{"rects": [{"id": "y", "x": 0, "y": 0, "w": 2, "h": 2, "label": "shelf"}]}"#)
        .unwrap();
    let out = strata(&["eval", "--pred", &p(d, "pred.json"), "--truth", &p(d, "truth.json"), "--out", &p(d, "m.json")]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("key mismatch"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn errors_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = strata(&["relate", "--scene", &p(d, "nope.json"), "--out", &p(d, "g.json")]);
    assert!(!missing.status.success());
    let err = String::from_utf8(missing.stderr).unwrap();
    assert!(err.starts_with("error: cannot access"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    fs::write(d.join("bad.pgm"), b"P3 1 1 255 0 0 0").unwrap();
    let bad = strata(&["extract", "--image", &p(d, "bad.pgm"), "--out", &p(d, "s.json")]);
    assert!(!bad.status.success());
    assert!(String::from_utf8(bad.stderr).unwrap().contains("bad magic"));

    fs::write(d.join("run.json"), r#"{"seed": 1, "colour": "red"}"#).unwrap();
    let cfg = strata(&["pipeline", "--config", &p(d, "run.json"), "--out-dir", &p(d, "out")]);
    assert!(!cfg.status.success());
    assert!(String::from_utf8(cfg.stderr).unwrap().contains("unknown field"));
}

#[test]
fn expert_axioms_path_resolves_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("axioms.json"),
        r#"{"symmetric": ["aligned"], "inverses": [["on_left_of", "on_right_of"], ["contains", "inside"], ["above", "below"], ["on_top_of", "under"]]}"#,
    )
    .unwrap();
    fs::write(
        d.join("run.json"),
        r#"{"seed": 2, "scene": {"n_bays": 1, "n_shelf_rows": 2, "n_distractors": 2}, "expert_axioms_path": "axioms.json"}"#,
    )
    .unwrap();
    ok(&["pipeline", "--config", &p(d, "run.json"), "--out-dir", &p(d, "out")]);
    assert!(d.join("out/metrics.json").exists());
}
