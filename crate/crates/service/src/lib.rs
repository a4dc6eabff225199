//! Session engine, experiment harness, recording and WebSocket server for
//! the crawling robot simulator.
//!
//! A [`session::Session`] steps the oscillator, the gait tables, the body
//! model, the planar world and the teleoperation arbiter once per control
//! tick. The same engine backs headless runs, recorded sessions and the
//! live server.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod course;
pub mod error;
pub mod experiments;
pub mod protocol;
pub mod record;
pub mod server;
pub mod session;
pub mod speed;

pub use config::{DriveMode, SessionConfig};
pub use error::{Result, ServiceError};
pub use session::{run_session, CommandSource, RunSummary, Session, Snapshot, Status};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/session.md")]
    struct Session;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
    #[doc = include_str!("../../../book/src/interfaces.md")]
    struct Interfaces;
}
