//! Steady body speed per phase index and frequency, computed once with the
//! plant model and reused by the session.

use std::collections::HashMap;

use crawler_core::plant::pneumatic::{PneumaticDrive, PneumaticParams};
use crawler_core::plant::{self, AnalyticDrive, PlantParams, MIN_CYCLES};

use crate::config::DriveMode;
use crate::error::Result;

/// Steady speed in m/s of straight crawling with phase index `n` at `f` Hz.
pub fn plant_speed(params: &PlantParams, pneu: &PneumaticParams, drive: DriveMode, n: u8, f: f64) -> Result<f64> {
    let p = PlantParams { frequency: f, ..*params }.with_phase_index(n);
    let duration = MIN_CYCLES / f;
    let traj = match drive {
        DriveMode::Analytic => plant::simulate(&p, &AnalyticDrive(p), duration, Default::default())?,
        DriveMode::Valve => {
            let d = PneumaticDrive::square_wave(f, p.lag_seconds(), duration + p.period(), *pneu, p.rest_length);
            plant::simulate(&p, &d, duration, Default::default())?
        }
    };
    Ok(plant::steady_speed(&traj)?)
}

#[derive(Debug, Clone)]
pub struct SpeedTable {
    params: PlantParams,
    pneu: PneumaticParams,
    drive: DriveMode,
    cache: HashMap<(u8, u64), f64>,
}

impl SpeedTable {
    pub fn new(params: PlantParams, pneu: PneumaticParams, drive: DriveMode) -> Self {
        Self { params, pneu, drive, cache: HashMap::new() }
    }

    pub fn speed(&mut self, n: u8, f: f64) -> Result<f64> {
        if let Some(v) = self.cache.get(&(n, f.to_bits())) {
            return Ok(*v);
        }
        let v = plant_speed(&self.params, &self.pneu, self.drive, n, f)?;
        log::debug!("plant speed n={n} f={f}: {:.3} mm/s", v * 1e3);
        self.cache.insert((n, f.to_bits()), v);
        Ok(v)
    }
}
