//! Session records: one JSON object per line.
//!
//! The first line is a header with the format version, the full config, the
//! arena and the calibration entries. Command lines and snapshot lines
//! follow in tick order. The last line is a trailer with the SHA-256 of every
//! preceding line and, separately, of the snapshot lines alone. Replay
//! re-runs the session from the header and the commands and requires every
//! snapshot to match byte for byte.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::{Duration, Instant};

use crawler_core::teleop::UserCommand;
use crawler_core::world::Arena;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::CalibrationRow;
use crate::config::SessionConfig;
use crate::error::{Result, ServiceError};
use crate::session::{run_session, CommandSource, RunSummary, Session, Snapshot};

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordLine {
    Header { version: u32, config: Box<SessionConfig>, arena: Arena, calibration: Vec<CalibrationRow> },
    Command { tick: u64, command: UserCommand },
    Snapshot(Snapshot),
    Trailer { ticks: u64, snapshot_sha256: String, sha256: String },
}

struct Recorder<W: Write> {
    out: W,
    hasher: Sha256,
}

impl<W: Write> Recorder<W> {
    fn line(&mut self, line: &RecordLine) -> Result<()> {
        let text = serde_json::to_string(line)?;
        self.hasher.update(text.as_bytes());
        self.hasher.update(b"\n");
        writeln!(self.out, "{text}")?;
        Ok(())
    }
}

/// Runs a fresh session and writes its record to `out`.
pub fn record_session<W: Write>(
    cfg: SessionConfig,
    arena: Arena,
    calibration: &[CalibrationRow],
    source: &mut dyn CommandSource,
    max_ticks: u64,
    out: W,
    mut on_snapshot: impl FnMut(&Snapshot),
) -> Result<RunSummary> {
    let mut session = Session::new(cfg.clone(), arena.clone(), calibration)?;
    let mut rec = Recorder { out, hasher: Sha256::new() };
    rec.line(&RecordLine::Header { version: RECORD_VERSION, config: Box::new(cfg), arena, calibration: calibration.to_vec() })?;
    let summary = run_session(&mut session, source, max_ticks, |cmd, snap| {
        if let Some(c) = cmd {
            rec.line(&RecordLine::Command { tick: snap.tick, command: *c })?;
        }
        on_snapshot(snap);
        rec.line(&RecordLine::Snapshot(snap.clone()))
    })?;
    let sha256 = hex::encode(rec.hasher.clone().finalize());
    let trailer = RecordLine::Trailer { ticks: summary.ticks, snapshot_sha256: summary.snapshot_sha256.clone(), sha256 };
    writeln!(rec.out, "{}", serde_json::to_string(&trailer)?)?;
    rec.out.flush()?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReplayOptions {
    /// Simulated seconds per wall-clock second; `None` runs flat out.
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub ticks: u64,
    pub snapshot_sha256: String,
    pub wall: Duration,
}

/// Checks a record and re-runs it, handing each reproduced snapshot to
/// `on_snapshot`.
pub fn replay<R: BufRead>(
    input: R,
    opts: ReplayOptions,
    mut on_snapshot: impl FnMut(&Snapshot),
) -> Result<ReplaySummary> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let lines: Vec<&str> = lines.iter().map(|l| l.as_str()).filter(|l| !l.trim().is_empty()).collect();
    let (trailer_text, body) = lines.split_last().ok_or_else(|| malformed("empty record"))?;
    let first = body.first().ok_or_else(|| malformed("missing header"))?;

    let head: serde_json::Value = serde_json::from_str(first)?;
    if head.get("kind").and_then(|k| k.as_str()) != Some("header") {
        return Err(malformed("first line is not a header"));
    }
    let found = head.get("version").and_then(|v| v.as_u64()).ok_or_else(|| malformed("header without version"))?;
    if found != RECORD_VERSION as u64 {
        return Err(ServiceError::VersionMismatch { found: found as u32, expected: RECORD_VERSION });
    }

    let (ticks, snapshot_sha256, sha256) = match serde_json::from_str(trailer_text)? {
        RecordLine::Trailer { ticks, snapshot_sha256, sha256 } => (ticks, snapshot_sha256, sha256),
        _ => return Err(malformed("last line is not a trailer")),
    };
    let mut hasher = Sha256::new();
    for l in body {
        hasher.update(l.as_bytes());
        hasher.update(b"\n");
    }
    if hex::encode(hasher.finalize()) != sha256 {
        return Err(ServiceError::ChecksumMismatch);
    }

    let mut header = None;
    let mut commands: BTreeMap<u64, UserCommand> = BTreeMap::new();
    let mut recorded = Vec::new();
    for l in body {
        match serde_json::from_str(l)? {
            RecordLine::Header { config, arena, calibration, .. } => header = Some((*config, arena, calibration)),
            RecordLine::Command { tick, command } => {
                commands.insert(tick, command);
            }
            RecordLine::Snapshot(s) => recorded.push(s.to_line()),
            RecordLine::Trailer { .. } => return Err(malformed("trailer before the end")),
        }
    }
    let (config, arena, calibration) = header.ok_or_else(|| malformed("missing header"))?;
    if recorded.len() as u64 != ticks {
        return Err(malformed("snapshot count differs from the trailer"));
    }

    let mut session = Session::new(config, arena, &calibration)?;
    let mut source = |tick: u64, _: Option<&Snapshot>| commands.get(&tick).copied();
    let start = Instant::now();
    let summary = run_session(&mut session, &mut source, ticks, |_, snap| {
        let i = snap.tick as usize;
        if recorded.get(i).map(String::as_str) != Some(snap.to_line().as_str()) {
            return Err(ServiceError::ReplayDiverged(snap.tick));
        }
        if let Some(speed) = opts.speed {
            let due = Duration::from_secs_f64(snap.t / speed);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        on_snapshot(snap);
        Ok(())
    })?;
    if summary.ticks != ticks || summary.snapshot_sha256 != snapshot_sha256 {
        return Err(ServiceError::ReplayDiverged(summary.ticks));
    }
    Ok(ReplaySummary { ticks, snapshot_sha256: summary.snapshot_sha256, wall: start.elapsed() })
}

fn malformed(msg: &str) -> ServiceError {
    ServiceError::MalformedRecord(msg.into())
}
