//! Session configuration, read from JSON. Every field has a default.

use std::path::{Path, PathBuf};

use crawler_core::oscillator::{CpgParams, F_MAX};
use crawler_core::plant::pneumatic::PneumaticParams;
use crawler_core::plant::PlantParams;
use crawler_core::teleop::{CommandKind, TeleopConfig, UserCommand};
use crawler_core::world::{PlanarParams, Pose, SensorParams};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

/// Where per-cycle body speed comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveMode {
    /// Imposed sinusoidal link lengths of fixed amplitude.
    #[default]
    Analytic,
    /// Link lengths from the valve schedule through the pneumatic model.
    Valve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Oscillator weights and the control tick rate.
    pub cpg: CpgParams,
    pub plant: PlantParams,
    pub pneumatic: PneumaticParams,
    pub planar: PlanarParams,
    pub sensors: SensorParams,
    pub teleop: TeleopConfig,
    pub drive: DriveMode,
    /// Arena JSON file; `None` for an empty unbounded plane.
    pub arena: Option<PathBuf>,
    /// Frequency calibration table written by `calibrate`.
    pub calibration: Option<PathBuf>,
    /// Radius of the collision disc around the head, mm.
    pub footprint_mm: f64,
    pub start: Pose,
    /// Command in force before the operator sends one.
    pub initial_command: UserCommand,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            cpg: CpgParams::default(),
            plant: PlantParams::default(),
            pneumatic: PneumaticParams::default(),
            planar: PlanarParams::default(),
            sensors: SensorParams::default(),
            teleop: TeleopConfig::default(),
            drive: DriveMode::default(),
            arena: None,
            calibration: None,
            footprint_mm: 15.0,
            start: Pose::default(),
            initial_command: UserCommand::new(CommandKind::Stop, 0.5),
            seed: 0,
        }
    }
}

impl SessionConfig {
    /// Reads a config file. Relative arena and calibration paths are taken
    /// from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: SessionConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.arena, &mut cfg.calibration].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tick_rate(&self) -> f64 {
        self.cpg.tick_rate
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ServiceError::Config(m));
        self.cpg.validate()?;
        if self.cpg.tick_rate < 20.0 * F_MAX {
            return bad(format!("tick rate {} Hz is below {} Hz", self.cpg.tick_rate, 20.0 * F_MAX));
        }
        self.plant.validate()?;
        if let Err(m) = self.pneumatic.validate() {
            return bad(m.into());
        }
        self.sensors.validate()?;
        if !(self.planar.turn_rate_deg > 0.0) {
            return bad("turn rate must be positive".into());
        }
        if !(self.teleop.override_mm < self.teleop.free_mm) {
            return bad("override distance must be below the free distance".into());
        }
        if !(self.footprint_mm > 0.0) {
            return bad("footprint radius must be positive".into());
        }
        self.initial_command.validate().map_err(ServiceError::Config)?;
        Ok(())
    }
}
