mod common;

use std::path::Path;
use std::process::{Command, Output};

fn mediator(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mediator")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decide_prints_the_safer_candidate() {
    let out = mediator(&["decide", path(&common::fixture("two_candidates.json"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    let d: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(d["chosen"]["action_id"], 2);
    assert!((d["all_scored"][0]["objective_value"].as_f64().unwrap() - -0.7).abs() < 1e-9);
    assert!((d["all_scored"][1]["objective_value"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn decide_honours_config_mode() {
    let out = mediator(&[
        "decide",
        path(&common::fixture("two_candidates.json")),
        "--config",
        path(&common::fixture("config_algorithm1.json")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let d: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((d["all_scored"][0]["objective_value"].as_f64().unwrap() - -0.85).abs() < 1e-9);
}

#[test]
fn assess_prints_integrity_score() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::annotated_posts().into_iter().find(|p| p.expected_claims == 3 && p.expected_conflicts == 1).unwrap();
    let post = dir.path().join("post.json");
    std::fs::write(&post, serde_json::to_string(&fixture.post).unwrap()).unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, serde_json::to_string(&common::fact_config()).unwrap()).unwrap();
    let out = mediator(&["assess", path(&post), "--config", path(&config)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(s["conflicts"], 1);
    assert_eq!(s["total_claims"], 3);
}

#[test]
fn simulate_is_seeded_and_replays() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path| {
        mediator(&["simulate", "--profile", "doomscroller", "--seed", "42", "--minutes", "30", "--out", path(dir)])
    };
    let (ra, rb) = (args(a.path()), args(b.path()));
    assert!(ra.status.success(), "{}", stderr(&ra));
    assert_eq!(stdout(&ra), stdout(&rb));
    let csv = std::fs::read_to_string(a.path().join("report.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.path().join("report.csv")).unwrap());
    assert!(csv.starts_with("schema_version,"));
    assert!(a.path().join("summary.txt").exists());

    let audit = a.path().join("audit.jsonl");
    let ok = mediator(&["replay", path(&audit)]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).starts_with("replay ok"));

    let diff = mediator(&["replay", path(&audit), "--config", path(&common::fixture("config_algorithm1.json"))]);
    assert_eq!(diff.status.code(), Some(3));
    assert!(stderr(&diff).contains("seq 1"), "{}", stderr(&diff));

    let other_seed = mediator(&["simulate", "--profile", "doomscroller", "--seed", "43", "--minutes", "30"]);
    assert_ne!(stdout(&other_seed), stdout(&ra));
}

#[test]
fn tampered_audit_names_the_seq() {
    let dir = tempfile::tempdir().unwrap();
    let out = mediator(&["simulate", "--profile", "late-night", "--seed", "7", "--minutes", "10", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let audit = dir.path().join("audit.jsonl");
    let text = std::fs::read_to_string(&audit).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let at = lines
        .iter()
        .position(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["seq"] == 10 && v.get("explanation").is_some()
        })
        .unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&lines[at]).unwrap();
    v["explanation"] = "edited".into();
    lines[at] = v.to_string();
    std::fs::write(&audit, lines.join("\n") + "\n").unwrap();
    let r = mediator(&["replay", path(&audit)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(stderr(&r).contains("seq 10") && stderr(&r).contains("explanation"), "{}", stderr(&r));
}

#[test]
fn config_validate_reports_fields() {
    let bad = mediator(&["config", "validate", path(&common::fixture("config_tau_out_of_range.json"))]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("tau"));
    let good = mediator(&["config", "validate", path(&common::fixture("config_algorithm1.json"))]);
    assert_eq!(good.status.code(), Some(0), "{}", stderr(&good));
    assert!(stdout(&good).contains("\"algorithm1\""));
}

#[test]
fn usage_and_unreadable_files_exit_one() {
    assert_eq!(mediator(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mediator(&["simulate", "--profile", "bored"]).status.code(), Some(1));
    let missing = mediator(&["assess", "/definitely/not/here.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("cannot read"));
    assert_eq!(mediator(&["--help"]).status.code(), Some(0));
}

#[test]
fn serve_refuses_public_bind_without_token() {
    let out = mediator(&["serve", "--addr", "0.0.0.0:0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("token"), "{}", stderr(&out));
}
