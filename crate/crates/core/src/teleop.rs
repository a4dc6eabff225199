//! Assisted teleoperation.
//!
//! The nearer of the two sensor readings selects one of three bands. Far
//! away the operator is in full control. In the middle band the sign of
//! `δ = d_R - d_L` raises a steering suggestion toward the freer side. Close
//! in, the operator is overridden and the robot turns away from the nearer
//! obstacle.

use serde::{Deserialize, Serialize};

use crate::gait::LocomotionMode;
use crate::oscillator::{F_MAX, F_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn mirror(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn turn(self) -> LocomotionMode {
        match self {
            Side::Left => LocomotionMode::TurnLeft,
            Side::Right => LocomotionMode::TurnRight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Forward(u8),
    SteerLeft,
    SteerRight,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCommand {
    pub kind: CommandKind,
    /// Hz.
    pub frequency: f64,
}

impl UserCommand {
    pub fn new(kind: CommandKind, frequency: f64) -> Self {
        Self { kind, frequency }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(F_MIN..=F_MAX).contains(&self.frequency) {
            return Err(format!("frequency {} Hz outside [{F_MIN}, {F_MAX}] Hz", self.frequency));
        }
        if let CommandKind::Forward(n) = self.kind {
            if n > 3 {
                return Err(format!("phase index {n} outside 0..=3"));
            }
        }
        Ok(())
    }

    pub fn mirror(self) -> Self {
        let kind = match self.kind {
            CommandKind::SteerLeft => CommandKind::SteerRight,
            CommandKind::SteerRight => CommandKind::SteerLeft,
            k => k,
        };
        Self { kind, ..self }
    }

    pub fn mode(&self) -> LocomotionMode {
        match self.kind {
            CommandKind::Forward(n) => LocomotionMode::Rectilinear(n),
            CommandKind::SteerLeft => LocomotionMode::TurnLeft,
            CommandKind::SteerRight => LocomotionMode::TurnRight,
            CommandKind::Stop => LocomotionMode::Idle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alert {
    #[default]
    None,
    SteerRightSuggested,
    SteerLeftSuggested,
    OverrideTurn(Side),
}

impl Alert {
    pub fn mirror(self) -> Self {
        match self {
            Alert::SteerRightSuggested => Alert::SteerLeftSuggested,
            Alert::SteerLeftSuggested => Alert::SteerRightSuggested,
            Alert::OverrideTurn(s) => Alert::OverrideTurn(s.mirror()),
            Alert::None => Alert::None,
        }
    }

    /// 0 for none, 1 for a suggestion, 2 for an override.
    pub fn severity(self) -> u8 {
        match self {
            Alert::None => 0,
            Alert::SteerRightSuggested | Alert::SteerLeftSuggested => 1,
            Alert::OverrideTurn(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleopDecision {
    pub effective: LocomotionMode,
    pub alert: Alert,
    /// `d_R - d_L`, mm.
    pub delta: f64,
}

impl TeleopDecision {
    pub fn mirror(self) -> Self {
        Self { effective: self.effective.mirror(), alert: self.alert.mirror(), delta: -self.delta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleopConfig {
    /// Beyond this distance the operator has full control, mm.
    pub free_mm: f64,
    /// At or below this distance the operator is overridden, mm.
    pub override_mm: f64,
    /// Turn direction when both readings are equal inside the override band.
    pub tie_turn: Side,
    /// Whether the override also turns a robot the operator has stopped.
    pub override_when_stopped: bool,
}

impl Default for TeleopConfig {
    fn default() -> Self {
        Self { free_mm: 200.0, override_mm: 50.0, tie_turn: Side::Left, override_when_stopped: true }
    }
}

pub fn arbitrate(cmd: &UserCommand, d_l: f64, d_r: f64, cfg: &TeleopConfig) -> TeleopDecision {
    let delta = d_r - d_l;
    let nearest = d_l.min(d_r);
    let user = cmd.mode();
    let stopped = cmd.kind == CommandKind::Stop;

    if nearest <= cfg.override_mm && (!stopped || cfg.override_when_stopped) {
        let side = if delta > 0.0 {
            Side::Right
        } else if delta < 0.0 {
            Side::Left
        } else {
            cfg.tie_turn
        };
        return TeleopDecision { effective: side.turn(), alert: Alert::OverrideTurn(side), delta };
    }
    let alert = if nearest <= cfg.free_mm {
        if delta > 0.0 {
            Alert::SteerRightSuggested
        } else if delta < 0.0 {
            Alert::SteerLeftSuggested
        } else {
            Alert::None
        }
    } else {
        Alert::None
    };
    TeleopDecision { effective: user, alert, delta }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fwd() -> UserCommand {
        UserCommand::new(CommandKind::Forward(1), 0.5)
    }

    #[test]
    fn free_band() {
        let d = arbitrate(&fwd(), 300.0, 300.0, &TeleopConfig::default());
        assert_eq!(d.effective, LocomotionMode::Rectilinear(1));
        assert_eq!(d.alert, Alert::None);
    }

    #[test]
    fn suggestion_band() {
        let d = arbitrate(&fwd(), 100.0, 150.0, &TeleopConfig::default());
        assert_eq!(d.effective, LocomotionMode::Rectilinear(1));
        assert_eq!(d.delta, 50.0);
        assert_eq!(d.alert, Alert::SteerRightSuggested);
        let tie = arbitrate(&fwd(), 120.0, 120.0, &TeleopConfig::default());
        assert_eq!(tie.alert, Alert::None);
    }

    #[test]
    fn override_band() {
        let d = arbitrate(&fwd(), 40.0, 300.0, &TeleopConfig::default());
        assert_eq!(d.effective, LocomotionMode::TurnRight);
        assert_eq!(d.alert, Alert::OverrideTurn(Side::Right));
        assert_eq!(d.delta, 260.0);
    }

    #[test]
    fn band_edges_are_closed_below() {
        let c = TeleopConfig::default();
        assert_eq!(arbitrate(&fwd(), 200.0, 600.0, &c).alert, Alert::SteerRightSuggested);
        assert_eq!(arbitrate(&fwd(), 200.1, 600.0, &c).alert, Alert::None);
        assert_eq!(arbitrate(&fwd(), 50.0, 600.0, &c).alert, Alert::OverrideTurn(Side::Right));
    }

    #[test]
    fn tie_inside_override() {
        let c = TeleopConfig::default();
        assert_eq!(arbitrate(&fwd(), 30.0, 30.0, &c).effective, LocomotionMode::TurnLeft);
        let c = TeleopConfig { tie_turn: Side::Right, ..c };
        assert_eq!(arbitrate(&fwd(), 30.0, 30.0, &c).effective, LocomotionMode::TurnRight);
    }

    #[test]
    fn stop_override_configurable() {
        let stop = UserCommand::new(CommandKind::Stop, 0.5);
        let c = TeleopConfig::default();
        assert_eq!(arbitrate(&stop, 150.0, 600.0, &c).effective, LocomotionMode::Idle);
        assert_eq!(arbitrate(&stop, 30.0, 600.0, &c).effective, LocomotionMode::TurnRight);
        let off = TeleopConfig { override_when_stopped: false, ..c };
        assert_eq!(arbitrate(&stop, 30.0, 600.0, &off).effective, LocomotionMode::Idle);
    }

    #[test]
    fn command_validation() {
        assert!(UserCommand::new(CommandKind::Forward(4), 0.5).validate().is_err());
        assert!(UserCommand::new(CommandKind::Stop, 1.6).validate().is_err());
        assert!(fwd().validate().is_ok());
    }
}
