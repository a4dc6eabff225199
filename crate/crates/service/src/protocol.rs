//! JSON messages exchanged with operator clients over WebSocket text frames.

use crawler_core::gait::LocomotionMode;
use crawler_core::teleop::{Alert, CommandKind, Side, UserCommand};
use crawler_core::world::Arena;
use serde::{Deserialize, Serialize};

use crate::session::{Snapshot, Status};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireMode {
    Forward,
    Left,
    Right,
    Stop,
}

fn default_phase() -> u8 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireCommand {
    pub mode: WireMode,
    /// Quarter-period lag for forward crawling, 0 to 3.
    #[serde(default = "default_phase")]
    pub phase_n: u8,
    pub freq_hz: f64,
}

impl WireCommand {
    pub fn to_user(self) -> Result<UserCommand, String> {
        let kind = match self.mode {
            WireMode::Forward => CommandKind::Forward(self.phase_n),
            WireMode::Left => CommandKind::SteerLeft,
            WireMode::Right => CommandKind::SteerRight,
            WireMode::Stop => CommandKind::Stop,
        };
        let cmd = UserCommand::new(kind, self.freq_hz);
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn from_user(cmd: &UserCommand) -> Self {
        let (mode, phase_n) = match cmd.kind {
            CommandKind::Forward(n) => (WireMode::Forward, n),
            CommandKind::SteerLeft => (WireMode::Left, 1),
            CommandKind::SteerRight => (WireMode::Right, 1),
            CommandKind::Stop => (WireMode::Stop, 1),
        };
        Self { mode, phase_n, freq_hz: cmd.frequency }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Command(WireCommand),
    /// Restarts the session after a collision.
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirePose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireSensors {
    pub dl: f64,
    pub dr: f64,
    pub hit_l: bool,
    pub hit_r: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireValves {
    pub ar: bool,
    pub al: bool,
    pub pr: bool,
    pub pl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSnapshot {
    pub tick: u64,
    pub t: f64,
    pub pose: WirePose,
    pub sensors: WireSensors,
    pub valves: WireValves,
    /// `none`, `steer_left`, `steer_right`, `override_left` or `override_right`.
    pub alert: String,
    /// Arbitrated mode.
    pub mode: String,
    /// Gait currently driving the valves.
    pub gait: String,
    /// mm/s.
    pub speed: f64,
    pub status: Status,
}

pub fn alert_name(a: Alert) -> &'static str {
    match a {
        Alert::None => "none",
        Alert::SteerLeftSuggested => "steer_left",
        Alert::SteerRightSuggested => "steer_right",
        Alert::OverrideTurn(Side::Left) => "override_left",
        Alert::OverrideTurn(Side::Right) => "override_right",
    }
}

pub fn mode_name(m: LocomotionMode) -> String {
    use LocomotionMode::*;
    match m {
        Rectilinear(n) => format!("rectilinear_{n}"),
        TurnLeft => "turn_left".into(),
        TurnRight => "turn_right".into(),
        WindingILeft => "winding_i_left".into(),
        WindingIRight => "winding_i_right".into(),
        WindingIILeft => "winding_ii_left".into(),
        WindingIIRight => "winding_ii_right".into(),
        Idle => "idle".into(),
    }
}

impl From<&Snapshot> for WireSnapshot {
    fn from(s: &Snapshot) -> Self {
        Self {
            tick: s.tick,
            t: s.t,
            pose: WirePose { x: s.pose.x, y: s.pose.y, psi: s.pose.heading },
            sensors: WireSensors { dl: s.sensors.d_l, dr: s.sensors.d_r, hit_l: s.sensors.hit_l, hit_r: s.sensors.hit_r },
            valves: WireValves { ar: s.valves.ar, al: s.valves.al, pr: s.valves.pr, pl: s.valves.pl },
            alert: alert_name(s.alert).into(),
            mode: mode_name(s.mode),
            gait: mode_name(s.gait),
            speed: s.speed,
            status: s.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello { protocol: u32, tick_rate: f64, snapshot_hz: f64, arena: Arena },
    Snapshot(WireSnapshot),
    Error { message: String },
}

impl ServerMessage {
    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }
}

/// One line of a command script file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub tick: u64,
    #[serde(flatten)]
    pub command: WireCommand,
}
