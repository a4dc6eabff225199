use std::io::Cursor;
use std::time::Instant;

use crawler_core::teleop::{CommandKind, UserCommand};
use crawler_core::world::Arena;
use crawler_service::record::{record_session, replay, ReplayOptions, RECORD_VERSION};
use crawler_service::session::{Script, Snapshot};
use crawler_service::{ServiceError, SessionConfig};

fn recorded(ticks: u64) -> (String, Vec<Snapshot>, String) {
    let events = vec![
        (0, UserCommand::new(CommandKind::Forward(1), 1.0)),
        (150, UserCommand::new(CommandKind::SteerLeft, 1.0)),
        (260, UserCommand::new(CommandKind::Forward(0), 1.5)),
    ];
    let mut out = Vec::new();
    let mut snaps = Vec::new();
    let summary = record_session(
        SessionConfig::default(),
        Arena::unbounded(),
        &[],
        &mut Script::new(events),
        ticks,
        &mut out,
        |s| snaps.push(s.clone()),
    )
    .unwrap();
    (String::from_utf8(out).unwrap(), snaps, summary.snapshot_sha256)
}

#[test]
fn replay_reproduces_every_snapshot() {
    let (text, snaps, hash) = recorded(400);
    let mut again = Vec::new();
    let summary = replay(Cursor::new(&text), ReplayOptions::default(), |s| again.push(s.clone())).unwrap();
    assert_eq!(summary.ticks, 400);
    assert_eq!(summary.snapshot_sha256, hash);
    assert_eq!(again, snaps);
}

#[test]
fn record_layout() {
    let (text, _, _) = recorded(100);
    let lines: Vec<&str> = text.lines().collect();
    let kind = |l: &str| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string();
    assert_eq!(kind(lines[0]), "header");
    assert_eq!(kind(lines[lines.len() - 1]), "trailer");
    assert_eq!(lines.iter().filter(|l| kind(l) == "snapshot").count(), 100);
    assert_eq!(lines.iter().filter(|l| kind(l) == "command").count(), 1);
}

#[test]
fn tampered_snapshot_fails_checksum() {
    let (text, _, _) = recorded(200);
    let tampered = text.replacen("\"tick\":57,", "\"tick\":58,", 1);
    assert_ne!(tampered, text);
    let err = replay(Cursor::new(tampered), ReplayOptions::default(), |_| {}).unwrap_err();
    assert!(matches!(err, ServiceError::ChecksumMismatch), "{err}");
}

#[test]
fn tampered_command_fails_checksum() {
    let (text, _, _) = recorded(200);
    let tampered = text.replacen("\"forward\":1", "\"forward\":2", 1);
    assert_ne!(tampered, text);
    assert!(matches!(replay(Cursor::new(tampered), ReplayOptions::default(), |_| {}), Err(ServiceError::ChecksumMismatch)));
}

#[test]
fn other_version_rejected() {
    let (text, _, _) = recorded(50);
    let tampered = text.replacen(&format!("\"version\":{RECORD_VERSION}"), "\"version\":99", 1);
    match replay(Cursor::new(tampered), ReplayOptions::default(), |_| {}) {
        Err(ServiceError::VersionMismatch { found, expected }) => assert_eq!((found, expected), (99, RECORD_VERSION)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncated_record_rejected() {
    let (text, _, _) = recorded(50);
    let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
    assert!(replay(Cursor::new(cut), ReplayOptions::default(), |_| {}).is_err());
    assert!(matches!(replay(Cursor::new(""), ReplayOptions::default(), |_| {}), Err(ServiceError::MalformedRecord(_))));
}

#[test]
fn paced_replay_same_data_bounded_wall_clock() {
    // 100 ticks are 2 simulated seconds: 0.2 s of wall clock at 10x.
    let (text, snaps, hash) = recorded(100);
    let t0 = Instant::now();
    let mut paced = Vec::new();
    let s = replay(Cursor::new(&text), ReplayOptions { speed: Some(10.0) }, |s| paced.push(s.clone())).unwrap();
    let wall = t0.elapsed().as_secs_f64();
    assert_eq!(paced, snaps);
    assert_eq!(s.snapshot_sha256, hash);
    assert!(wall >= 0.19, "{wall}");
    assert!(wall < 2.0, "{wall}");
}
