use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crawler_core::world::Arena;
use crawler_service::course::three_obstacle_arena;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn crawler(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_crawler")).args(args).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_arena_matches_the_course() {
    let text = std::fs::read_to_string(repo().join("arenas/three_obstacles.json")).unwrap();
    assert_eq!(Arena::from_json(&text).unwrap(), three_obstacle_arena());
}

#[test]
fn simulate_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    crawler(&["simulate", "--duration", "20", "--phase", "1", "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,x_P,x_M,x_A"));
    assert_eq!(lines.count(), 1001);
}

#[test]
fn experiments_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, header) in [
        ("phase-sweep", "n,lag_s,speed_mm_s,oracle_mm_s"),
        ("force-corr", "n,speed_mm_s,peak_force_n"),
        ("freq-sweep", "f_hz,speed_mm_s,stride_mm"),
    ] {
        let out = dir.path().join(format!("{kind}.csv"));
        crawler(&["experiment", kind, "--out", s(&out)]);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
    }
}

#[test]
fn calibrate_then_run_with_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("cal.csv");
    crawler(&["calibrate", "--freqs", "0.5,1.0", "--out", s(&table)]);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 3);

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"calibration": "cal.csv"}"#).unwrap();
    let record = dir.path().join("run.jsonl");
    let script = repo().join("configs/course_script.json");
    crawler(&["run", "--config", s(&cfg), "--script", s(&script), "--ticks", "600", "--record", s(&record)]);
    let out = crawler(&["replay", "--record", s(&record)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("replayed 600 ticks"));
}

#[test]
fn course_run_replays_to_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("course.jsonl");
    let csv = dir.path().join("course.csv");
    let out = crawler(&["run", "--ticks", "4000", "--record", s(&record), "--csv", s(&csv)]);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["status"], "running");
    let hash = summary["snapshot_sha256"].as_str().unwrap().to_string();
    let replayed = crawler(&["replay", "--record", s(&record)]);
    assert!(String::from_utf8_lossy(&replayed.stdout).contains(&hash));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4001);
}

#[test]
fn shipped_course_config_loads() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("c.jsonl");
    let cfg = repo().join("configs/course.json");
    crawler(&["run", "--config", s(&cfg), "--ticks", "100", "--record", s(&record)]);
}

#[test]
fn bad_arguments_fail() {
    let out = Command::new(env!("CARGO_BIN_EXE_crawler")).args(["experiment", "nope", "--out", "x"]).output().unwrap();
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_crawler"))
        .args(["calibrate", "--freqs", "3.0", "--out", "/nonexistent/x.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
