//! Three-obstacle demonstration course and a scripted waypoint pilot.
//!
//! The pilot steers toward the next waypoint and ignores steering
//! suggestions, so the arbiter has to step in when it passes too close.

use crawler_core::teleop::{CommandKind, UserCommand};
use crawler_core::world::{normalize_angle, Arena, Bounds, Obstacle, Pose, Substrate};

use crate::config::SessionConfig;
use crate::session::{CommandSource, Snapshot};

pub fn three_obstacle_arena() -> Arena {
    Arena {
        bounds: Some(Bounds { w: 1600.0, h: 900.0 }),
        obstacles: vec![
            Obstacle::Circle { cx: 450.0, cy: 560.0, r: 80.0 },
            Obstacle::Rect { x: 750.0, y: 220.0, w: 120.0, h: 160.0 },
            Obstacle::Circle { cx: 1150.0, cy: 580.0, r: 70.0 },
        ],
        substrate: Substrate::Coarse,
    }
}

pub const COURSE_START: Pose = Pose { x: 100.0, y: 450.0, heading: 0.0 };
pub const COURSE_WAYPOINTS: [(f64, f64); 3] = [(600.0, 470.0), (1000.0, 460.0), (1480.0, 450.0)];

pub fn course_config() -> SessionConfig {
    SessionConfig { start: COURSE_START, ..SessionConfig::default() }
}

#[derive(Debug, Clone)]
pub struct WaypointPilot {
    waypoints: Vec<(f64, f64)>,
    next: usize,
    pub frequency: f64,
    pub phase_n: u8,
    /// Heading error tolerated before steering, degrees.
    pub tolerance_deg: f64,
    /// Distance at which a waypoint counts as reached, mm.
    pub reach_mm: f64,
    issued: Option<CommandKind>,
}

impl WaypointPilot {
    pub fn new(waypoints: Vec<(f64, f64)>, frequency: f64) -> Self {
        Self { waypoints, next: 0, frequency, phase_n: 1, tolerance_deg: 10.0, reach_mm: 60.0, issued: None }
    }

    pub fn for_course() -> Self {
        Self::new(COURSE_WAYPOINTS.to_vec(), 1.0)
    }

    /// Whether every waypoint has been reached.
    pub fn finished(&self) -> bool {
        self.next >= self.waypoints.len()
    }

    fn choose(&mut self, pose: &Pose) -> CommandKind {
        while let Some(&(wx, wy)) = self.waypoints.get(self.next) {
            if (wx - pose.x).hypot(wy - pose.y) > self.reach_mm {
                let error = normalize_angle((wy - pose.y).atan2(wx - pose.x) - pose.heading);
                let tol = self.tolerance_deg.to_radians();
                return if error > tol {
                    CommandKind::SteerLeft
                } else if error < -tol {
                    CommandKind::SteerRight
                } else {
                    CommandKind::Forward(self.phase_n)
                };
            }
            self.next += 1;
        }
        CommandKind::Stop
    }
}

impl CommandSource for WaypointPilot {
    fn poll(&mut self, _tick: u64, last: Option<&Snapshot>) -> Option<UserCommand> {
        let pose = last.map_or(COURSE_START, |s| s.pose);
        let kind = self.choose(&pose);
        if self.issued == Some(kind) {
            return None;
        }
        self.issued = Some(kind);
        Some(UserCommand::new(kind, self.frequency))
    }
}
