//! Planar layer over the one-dimensional body model.
//!
//! The robot is reduced to a pose at its head, where the two proximity
//! sensors sit. Gaits advance the pose once per actuation cycle; the sensors
//! are modelled as fans of rays inside two narrow cones pointing sideways
//! and forward. All lengths are millimetres, angles radians unless a field
//! name says otherwise.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::LocomotionMode;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("arena file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid arena: {0}")]
    Invalid(String),
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Counter-clockwise from +x, in `(-π, π]`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading) }
    }
}

/// Moves `ds` along the mean heading of the step, then turns by `dpsi`.
pub fn advance_pose(pose: Pose, ds: f64, dpsi: f64) -> Pose {
    let mid = pose.heading + 0.5 * dpsi;
    Pose { x: pose.x + ds * mid.cos(), y: pose.y + ds * mid.sin(), heading: normalize_angle(pose.heading + dpsi) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Obstacle {
    Circle { cx: f64, cy: f64, r: f64 },
    /// Axis-aligned; `(x, y)` is the lower-left corner.
    Rect { x: f64, y: f64, w: f64, h: f64 },
}

impl Obstacle {
    pub fn translated(self, dx: f64, dy: f64) -> Self {
        match self {
            Obstacle::Circle { cx, cy, r } => Obstacle::Circle { cx: cx + dx, cy: cy + dy, r },
            Obstacle::Rect { x, y, w, h } => Obstacle::Rect { x: x + dx, y: y + dy, w, h },
        }
    }

    /// Distance from `(px, py)` to the obstacle, zero inside.
    pub fn distance(&self, px: f64, py: f64) -> f64 {
        match *self {
            Obstacle::Circle { cx, cy, r } => ((px - cx).hypot(py - cy) - r).max(0.0),
            Obstacle::Rect { x, y, w, h } => {
                let dx = (x - px).max(0.0).max(px - (x + w));
                let dy = (y - py).max(0.0).max(py - (y + h));
                dx.hypot(dy)
            }
        }
    }

    /// Distance along the unit ray `(ox, oy) + t·(dx, dy)` to the first
    /// intersection, `Some(0.0)` when the origin is inside.
    pub fn ray_hit(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        match *self {
            Obstacle::Circle { cx, cy, r } => {
                let (fx, fy) = (ox - cx, oy - cy);
                let c = fx * fx + fy * fy - r * r;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let b = fx * dx + fy * dy;
                let disc = b * b - c;
                if disc < 0.0 || b > 0.0 {
                    return None;
                }
                Some(-b - disc.sqrt())
            }
            Obstacle::Rect { x, y, w, h } => {
                let (t_near, t_far) = slab(ox, oy, dx, dy, (x, x + w), (y, y + h))?;
                if t_far < 0.0 {
                    None
                } else {
                    Some(t_near.max(0.0))
                }
            }
        }
    }
}

// Entry and exit parameters of a ray through an axis-aligned box.
fn slab(ox: f64, oy: f64, dx: f64, dy: f64, xs: (f64, f64), ys: (f64, f64)) -> Option<(f64, f64)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for (o, d, (lo, hi)) in [(ox, dx, xs), (oy, dy, ys)] {
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            t_near = t_near.max(a.min(b));
            t_far = t_far.min(a.max(b));
        }
    }
    (t_near <= t_far).then_some((t_near, t_far))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Substrate {
    Fine,
    #[default]
    Coarse,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Arena {
    /// `[0, w] × [0, h]`; `None` for an unbounded plane.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub substrate: Substrate,
}

impl Arena {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let arena: Arena = serde_json::from_str(text)?;
        arena.validate()?;
        Ok(arena)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("arena serializes")
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if let Some(b) = self.bounds {
            if !(b.w > 0.0 && b.h > 0.0) {
                return Err(WorldError::Invalid("bounds must have positive size".into()));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let (x0, y0, x1, y1) = match *o {
                Obstacle::Circle { cx, cy, r } => {
                    if !(r > 0.0) {
                        return Err(WorldError::Invalid(format!("obstacle {i}: radius must be positive")));
                    }
                    (cx - r, cy - r, cx + r, cy + r)
                }
                Obstacle::Rect { x, y, w, h } => {
                    if !(w > 0.0 && h > 0.0) {
                        return Err(WorldError::Invalid(format!("obstacle {i}: size must be positive")));
                    }
                    (x, y, x + w, y + h)
                }
            };
            if let Some(b) = self.bounds {
                if x0 < 0.0 || y0 < 0.0 || x1 > b.w || y1 > b.h {
                    return Err(WorldError::Invalid(format!("obstacle {i} extends outside the bounds")));
                }
            }
        }
        Ok(())
    }

    /// Nearest hit along a unit ray among obstacles and the inside of the
    /// bounding walls.
    pub fn ray_distance(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        let walls = self.bounds.and_then(|b| slab(ox, oy, dx, dy, (0.0, b.w), (0.0, b.h))).map(|(_, far)| far.max(0.0));
        self.obstacles.iter().filter_map(|o| o.ray_hit(ox, oy, dx, dy)).chain(walls).reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    pub range_min: f64,
    pub range_max: f64,
    pub fov_deg: f64,
    /// Angle between the heading and each cone axis.
    pub mount_offset_deg: f64,
    pub rays_per_cone: usize,
    /// Half-width of optional uniform reading noise, mm; zero disables it.
    #[serde(default)]
    pub noise_mm: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self { range_min: 10.0, range_max: 600.0, fov_deg: 20.0, mount_offset_deg: 60.0, rays_per_cone: 7, noise_mm: 0.0 }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(0.0 <= self.range_min && self.range_min < self.range_max) {
            return Err(WorldError::Invalid("sensor range must satisfy 0 <= min < max".into()));
        }
        if !(self.fov_deg > 0.0) || self.rays_per_cone == 0 {
            return Err(WorldError::Invalid("sensor cone needs a positive field of view and rays".into()));
        }
        if !(self.noise_mm >= 0.0) {
            return Err(WorldError::Invalid("sensor noise must be non-negative".into()));
        }
        Ok(())
    }

    /// Ray directions of one cone around `axis`.
    pub fn ray_angles(&self, axis: f64) -> impl Iterator<Item = f64> + '_ {
        let half = 0.5 * self.fov_deg.to_radians();
        let n = self.rays_per_cone;
        (0..n).map(move |i| if n == 1 { axis } else { axis - half + 2.0 * half * i as f64 / (n - 1) as f64 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub d_l: f64,
    pub d_r: f64,
    pub hit_l: bool,
    pub hit_r: bool,
}

fn cone(pose: &Pose, arena: &Arena, sp: &SensorParams, axis: f64) -> (f64, bool) {
    let nearest = sp
        .ray_angles(axis)
        .filter_map(|a| arena.ray_distance(pose.x, pose.y, a.cos(), a.sin()))
        .reduce(f64::min);
    match nearest {
        Some(d) if d <= sp.range_max => (d.max(sp.range_min), true),
        _ => (sp.range_max, false),
    }
}

/// Left and right cone readings, clamped to the sensor range.
pub fn sense(pose: &Pose, arena: &Arena, sp: &SensorParams) -> SensorReading {
    let offset = sp.mount_offset_deg.to_radians();
    let (d_l, hit_l) = cone(pose, arena, sp, pose.heading + offset);
    let (d_r, hit_r) = cone(pose, arena, sp, pose.heading - offset);
    SensorReading { d_l, d_r, hit_l, hit_r }
}

/// [`sense`] with uniform noise of `sp.noise_mm` added to every reading.
pub fn sense_noisy<R: Rng + ?Sized>(pose: &Pose, arena: &Arena, sp: &SensorParams, rng: &mut R) -> SensorReading {
    let mut r = sense(pose, arena, sp);
    if sp.noise_mm > 0.0 {
        let mut jitter = |d: f64| (d + rng.random_range(-sp.noise_mm..=sp.noise_mm)).clamp(sp.range_min, sp.range_max);
        r.d_l = jitter(r.d_l);
        r.d_r = jitter(r.d_r);
    }
    r
}

/// Whether a disc of `radius` at the pose touches an obstacle or leaves the
/// bounds. Touching counts.
pub fn collide(pose: &Pose, radius: f64, arena: &Arena) -> bool {
    if let Some(b) = arena.bounds {
        if pose.x - radius <= 0.0 || pose.y - radius <= 0.0 || pose.x + radius >= b.w || pose.y + radius >= b.h {
            return true;
        }
    }
    arena.obstacles.iter().any(|o| o.distance(pose.x, pose.y) <= radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarParams {
    /// Heading change per cycle for the turning gaits, degrees. Uncalibrated.
    pub turn_rate_deg: f64,
    /// Forward advance of a turning cycle relative to a straight one.
    pub turn_advance_ratio: f64,
    /// Forward advance of a winding cycle relative to a straight one.
    pub winding_ratio: f64,
    /// Measured tip bending angles (AR, AL, PR, PL), degrees. Reference only.
    pub bend_angles_deg: [f64; 4],
}

impl Default for PlanarParams {
    fn default() -> Self {
        Self { turn_rate_deg: 8.0, turn_advance_ratio: 0.2, winding_ratio: 0.5, bend_angles_deg: [55.0, 63.0, 57.0, 49.0] }
    }
}

/// Pose increment `(ds mm, dpsi rad)` of one actuation cycle of `mode`.
/// `plant_speed` is the body speed in m/s for the mode's phase lag.
pub fn cycle_outcome(mode: LocomotionMode, plant_speed: f64, f: f64, planar: &PlanarParams) -> (f64, f64) {
    use LocomotionMode::*;
    let straight = plant_speed * 1e3 / f;
    let turn = planar.turn_rate_deg.to_radians();
    match mode {
        Rectilinear(_) => (straight, 0.0),
        TurnLeft => (straight * planar.turn_advance_ratio, turn),
        TurnRight => (straight * planar.turn_advance_ratio, -turn),
        // Winding I heads toward the active anterior chamber; winding II away
        // from the active posterior one. Both named for the resulting side.
        WindingILeft | WindingIILeft => (straight * planar.winding_ratio, 0.5 * turn),
        WindingIRight | WindingIIRight => (straight * planar.winding_ratio, -0.5 * turn),
        Idle => (0.0, 0.0),
    }
}
