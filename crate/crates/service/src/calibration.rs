//! Frequency calibration table: the modulatory input `m` for each target
//! frequency, stored as CSV so sessions skip the search.

use std::collections::HashMap;
use std::path::Path;

use crawler_core::oscillator::{self, CpgParams};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub f_hz: f64,
    pub m: f64,
}

/// Calibrates every frequency in `freqs`, in order. Fails on the first one
/// outside the oscillator's range.
pub fn calibration_table(freqs: &[f64], cpg: &CpgParams) -> Result<Vec<CalibrationRow>> {
    freqs.iter().map(|&f| Ok(CalibrationRow { f_hz: f, m: oscillator::calibrate(f, cpg)? })).collect()
}

pub fn write_table(path: &Path, rows: &[CalibrationRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Vec<CalibrationRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Memo of `m` per frequency, seeded from a table and filled on demand.
#[derive(Debug, Clone, Default)]
pub struct Calibrator {
    known: HashMap<u64, f64>,
}

impl Calibrator {
    pub fn from_rows(rows: &[CalibrationRow]) -> Self {
        Self { known: rows.iter().map(|r| (r.f_hz.to_bits(), r.m)).collect() }
    }

    pub fn m_for(&mut self, f: f64, cpg: &CpgParams) -> Result<f64> {
        if let Some(m) = self.known.get(&f.to_bits()) {
            return Ok(*m);
        }
        let m = oscillator::calibrate(f, cpg)?;
        log::debug!("calibrated {f} Hz: m = {m:.6}");
        self.known.insert(f.to_bits(), m);
        Ok(m)
    }

    /// Entries sorted by frequency.
    pub fn rows(&self) -> Vec<CalibrationRow> {
        let mut rows: Vec<_> = self.known.iter().map(|(f, m)| CalibrationRow { f_hz: f64::from_bits(*f), m: *m }).collect();
        rows.sort_by(|a, b| a.f_hz.total_cmp(&b.f_hz));
        rows
    }
}
