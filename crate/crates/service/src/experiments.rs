//! Parameter sweeps over the body model, written as CSV.

use std::io::Write;
use std::time::Instant;

use crawler_core::plant::pneumatic::PneumaticParams;
use crawler_core::plant::{self, AnalyticDrive, PlantParams, MIN_CYCLES};
use serde::Serialize;

use crate::config::DriveMode;
use crate::error::Result;
use crate::speed::plant_speed;

/// Tether stiffness for pulling-force runs, N/m.
pub const DEFAULT_TETHER_K: f64 = 20.0;
/// Step of the fixed-step cross-check, s.
pub const ORACLE_DT: f64 = 1e-4;
/// Tension peaks averaged per run.
pub const FORCE_PEAKS: usize = 10;
pub const SWEEP_FREQUENCIES: [f64; 6] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRow {
    pub n: u8,
    /// Posterior lag, s.
    pub lag_s: f64,
    pub speed_mm_s: f64,
    /// Same run with the fixed-step integrator, if requested.
    pub oracle_mm_s: Option<f64>,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Steady speed for each phase index over ten cycles.
pub fn phase_sweep(params: &PlantParams, phases: &[u8], with_oracle: bool) -> Result<Vec<PhaseRow>> {
    phases
        .iter()
        .map(|&n| {
            let p = params.with_phase_index(n);
            let duration = MIN_CYCLES / p.frequency;
            let start = Instant::now();
            let traj = plant::simulate(&p, &AnalyticDrive(p), duration, Default::default())?;
            let speed = plant::steady_speed(&traj)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let oracle_mm_s = if with_oracle {
                let states = plant::simulate_fixed_step(&p, &AnalyticDrive(p), duration, ORACLE_DT, 0.0)?;
                Some(plant::steady_speed_of_states(&states, p.frequency)? * 1e3)
            } else {
                None
            };
            Ok(PhaseRow { n, lag_s: p.lag_seconds(), speed_mm_s: speed * 1e3, oracle_mm_s, wall_ms })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreqRow {
    pub f_hz: f64,
    pub speed_mm_s: f64,
    pub stride_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqSweep {
    pub rows: Vec<FreqRow>,
    /// Whether the fastest entry is neither the first nor the last; `None`
    /// for the analytic drive, whose amplitude does not depend on frequency.
    pub interior_maximum: Option<bool>,
}

pub fn freq_sweep(
    params: &PlantParams,
    pneu: &PneumaticParams,
    drive: DriveMode,
    n: u8,
    freqs: &[f64],
) -> Result<FreqSweep> {
    let rows = freqs
        .iter()
        .map(|&f| {
            let v = plant_speed(params, pneu, drive, n, f)? * 1e3;
            Ok(FreqRow { f_hz: f, speed_mm_s: v, stride_mm: v / f })
        })
        .collect::<Result<Vec<_>>>()?;
    let interior_maximum = match drive {
        DriveMode::Analytic => None,
        DriveMode::Valve => {
            let best = rows.iter().enumerate().max_by(|a, b| a.1.speed_mm_s.total_cmp(&b.1.speed_mm_s)).map(|(i, _)| i);
            Some(matches!(best, Some(i) if i > 0 && i + 1 < rows.len()))
        }
    };
    Ok(FreqSweep { rows, interior_maximum })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceRow {
    pub n: u8,
    pub speed_mm_s: f64,
    /// Mean of the largest tension peaks, N.
    pub peak_force_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceCorrelation {
    pub rows: Vec<ForceRow>,
    /// Pearson coefficient between speed and peak force; `None` when fewer
    /// than two rows or either column is constant.
    pub r: Option<f64>,
}

/// Free-running speed and tethered pulling force for each phase index.
pub fn force_correlation(params: &PlantParams, phases: &[u8], tether_k: f64) -> Result<ForceCorrelation> {
    let rows = phases
        .iter()
        .map(|&n| {
            let p = params.with_phase_index(n);
            let duration = MIN_CYCLES / p.frequency;
            let free = plant::simulate(&p, &AnalyticDrive(p), duration, Default::default())?;
            let (_, tension) = plant::tether_force(&p, &AnalyticDrive(p), duration, tether_k)?;
            Ok(ForceRow {
                n,
                speed_mm_s: plant::steady_speed(&free)? * 1e3,
                peak_force_n: mean_top_peaks(&tension, FORCE_PEAKS),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.speed_mm_s).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.peak_force_n).collect();
    Ok(ForceCorrelation { r: pearson(&xs, &ys), rows })
}

/// Mean of the `k` largest local maxima of `series`; zero when flat.
pub fn mean_top_peaks(series: &[f64], k: usize) -> f64 {
    let mut peaks: Vec<f64> =
        series.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > 0.0).map(|w| w[1]).collect();
    if peaks.is_empty() {
        return 0.0;
    }
    peaks.sort_by(|a, b| b.total_cmp(a));
    peaks.truncate(k);
    peaks.iter().sum::<f64>() / peaks.len() as f64
}

// Spreads below these are treated as constant columns.
const SPEED_FLOOR: f64 = 1e-6;
const FORCE_FLOOR: f64 = 1e-9;

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let (sdx, sdy) = ((sxx / n as f64).sqrt(), (syy / n as f64).sqrt());
    if sdx < SPEED_FLOOR || sdy < FORCE_FLOOR {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
