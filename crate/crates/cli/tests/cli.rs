use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use wrts_core::modeling::ExtendedAnswerMatrix;
use wrts_core::pmea::artifact::{load_genome, load_model, load_replay};
use wrts_core::pmea::experiment::{records_from_jsonl, CSV_HEADER};
use wrts_core::strategy::rbp_default;

fn wrts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&wrts(&[])), 1);
    assert_eq!(code(&wrts(&["frobnicate"])), 1);
    assert_eq!(code(&wrts(&["pmea", "--rounds", "2"])), 1);
    assert_eq!(code(&wrts(&["simulate", "--persona", "berserker"])), 1);
    assert_eq!(code(&wrts(&["simulate", "--map", "builtin:atlantis"])), 1);
    assert_eq!(code(&wrts(&["simulate", "--seed", "minus-one"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let out = wrts(&["pmea", "--persona", "turtle", "--popsize", "1", "--output-dir", p(dir.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_cleanly() {
    let out = wrts(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["simulate", "evolve", "pmea", "experiment", "stats", "serve"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn artifact_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&wrts(&["simulate", "--vp-genome", p(&missing)])), 2);

    let bad_map = dir.path().join("bad.map");
    fs::write(&bad_map, "..a..\n..Q..\n").unwrap();
    assert_eq!(code(&wrts(&["simulate", "--map", p(&bad_map)])), 2);

    // a counts model where a genome is expected
    let model = dir.path().join("model.json");
    fs::write(&model, ExtendedAnswerMatrix::new().to_json()).unwrap();
    let out = wrts(&["simulate", "--vp-genome", p(&model)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));

    let records = dir.path().join("records.jsonl");
    fs::write(&records, "{\"map\": 3}\n").unwrap();
    let out = wrts(&["stats", "--records", p(&records)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn simulate_is_reproducible_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let replay = dir.path().join(format!("replay_{tag}.jsonl"));
        let model = dir.path().join(format!("model_{tag}.json"));
        let out = wrts(&[
            "simulate",
            "--map",
            "builtin:small25a",
            "--persona",
            "random(0.3)",
            "--seed",
            "17",
            "--replay-out",
            p(&replay),
            "--model-out",
            p(&model),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
        (summary, replay, model)
    };
    let (a, replay, model) = run("a");
    let (b, _, _) = run("b");
    assert_eq!(a, b);
    let replay = load_replay(&replay).unwrap();
    assert_eq!(a["replay_hash"], replay.hash());
    assert_eq!(ExtendedAnswerMatrix::from_replay(&replay), load_model(&model).unwrap());
}

#[test]
fn evolve_writes_genome_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, rbp_default().to_json()).unwrap();
    let genome = dir.path().join("best.json");
    let log = dir.path().join("ea.jsonl");
    let out = wrts(&[
        "evolve",
        "--model",
        p(&model),
        "--popsize",
        "6",
        "--generations",
        "4",
        "--max-turns",
        "600",
        "--out",
        p(&genome),
        "--log",
        p(&log),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    load_genome(&genome).unwrap();
    let lines = fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), 5);
    let mut last = f64::NEG_INFINITY;
    for line in lines.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let best = v["best_fitness"].as_f64().unwrap();
        assert!(best >= last);
        last = best;
    }
}

#[test]
fn pmea_refuses_a_directory_from_another_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "pmea", "--rounds", "1", "--persona", "aggressor", "--map", "builtin:capture7",
        "--popsize", "4", "--generations", "2", "--output-dir", p(dir.path()),
    ];
    let out = wrts(&base);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut other = base.to_vec();
    other.extend(["--seed", "9"]);
    let out = wrts(&other);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("different run"));
}

#[test]
fn stats_recomputes_the_experiment_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let records = dir.path().join("records.jsonl");
    let out = wrts(&[
        "experiment",
        "--maps",
        "builtin:capture7,builtin:arena20",
        "--games",
        "2",
        "--persona",
        "drifter(1)",
        "--popsize",
        "4",
        "--generations",
        "2",
        "--max-turns",
        "600",
        "--report-out",
        p(&report),
        "--records-out",
        p(&records),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    let raw = records_from_jsonl(&fs::read_to_string(&records).unwrap()).unwrap();
    assert_eq!(raw.len(), 2 * 2 * 2);

    let out = wrts(&["stats", "--records", p(&records)]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
}
