//! Model and control stack for a limbless crawling soft robot.
//!
//! - [`oscillator`]: two-neuron rhythm generator, frequency calibration,
//!   cycle regions and phase delays.
//! - [`gait`]: chamber valve tables for straight crawling, turning and
//!   winding.
//! - [`plant`]: three-node body with direction- and elongation-dependent
//!   friction, the adaptive solver, the pneumatic drive and a tether.
//! - [`world`]: planar pose, arena, proximity cones and collisions.
//! - [`teleop`]: arbitration between operator commands and the sensors.
//!
//! The guide in `book/` walks through each part; its code blocks are
//! compiled as doctests of this crate.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod gait;
pub mod oscillator;
pub mod plant;
pub mod teleop;
pub mod world;

pub use gait::{valve_table, GaitProgram, LocomotionMode, ValveCommand};
pub use oscillator::{CpgParams, CpgState, PhaseShift, RegionId};
pub use plant::{PlantParams, PlantState, Trajectory};
pub use teleop::{arbitrate, Alert, TeleopDecision, UserCommand};
pub use world::{Arena, Pose, SensorParams, SensorReading};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/oscillator.md")]
    struct Oscillator;
    #[doc = include_str!("../../../book/src/gait.md")]
    struct Gait;
    #[doc = include_str!("../../../book/src/plant.md")]
    struct Plant;
    #[doc = include_str!("../../../book/src/world.md")]
    struct World;
    #[doc = include_str!("../../../book/src/teleop.md")]
    struct Teleop;
}
