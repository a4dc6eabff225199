//! Tick-driven session: oscillator, gait, body, world and arbitration bound
//! into one deterministic loop that emits a [`Snapshot`] per tick.
//!
//! Sensing and arbitration run every tick, so the effective mode and the
//! alert follow the operator and the sensors at once. The valve program only
//! switches at the positive-going zero crossing of the first oscillator
//! output, which is also where the pose advances by one cycle of the gait
//! that just ran.

use std::io::Write;
use std::path::Path;

use crawler_core::gait::{GaitProgram, LocomotionMode, ValveCommand};
use crawler_core::oscillator::{self, CpgState, DelayLine, RegionId, WARM_UP_S};
use crawler_core::plant::pneumatic::{elongated_length, SegmentState};
use crawler_core::teleop::{arbitrate, Alert, TeleopDecision, UserCommand};
use crawler_core::world::{self, Arena, Pose, SensorReading};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{self, CalibrationRow, Calibrator};
use crate::config::SessionConfig;
use crate::error::{Result, ServiceError};
use crate::speed::SpeedTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Collided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentTelemetry {
    pub pressure_kpa: f64,
    pub length_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    /// Simulated time at the end of the tick, s.
    pub t: f64,
    /// Completed actuation cycles.
    pub cycle: u64,
    pub pose: Pose,
    pub sensors: SensorReading,
    /// Operator command in force.
    pub command: UserCommand,
    /// Arbitrated mode; drives the valves from the next cycle boundary.
    pub mode: LocomotionMode,
    /// Gait driving the valves this tick.
    pub gait: LocomotionMode,
    pub frequency: f64,
    pub alert: Alert,
    /// `d_R - d_L`, mm.
    pub delta: f64,
    pub cpg: [f64; 2],
    pub region: RegionId,
    pub delayed_region: Option<RegionId>,
    pub valves: ValveCommand,
    pub anterior: SegmentTelemetry,
    pub posterior: SegmentTelemetry,
    /// Mean forward speed of the current gait, mm/s.
    pub speed: f64,
    pub status: Status,
}

impl Snapshot {
    /// Canonical single-line JSON, the unit of hashing and recording.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

pub struct Session {
    cfg: SessionConfig,
    arena: Arena,
    calibrator: Calibrator,
    speeds: SpeedTable,
    cpg: CpgState,
    history: DelayLine<RegionId>,
    program: GaitProgram,
    command: UserCommand,
    pending: Option<UserCommand>,
    pose: Pose,
    anterior: SegmentState,
    posterior: SegmentState,
    cycle: u64,
    cycle_started: bool,
    rng: ChaCha8Rng,
    tick: u64,
    status: Status,
}

impl Session {
    /// Session with the arena and calibration files named in the config.
    pub fn from_config(cfg: SessionConfig) -> Result<Self> {
        let arena = load_arena(cfg.arena.as_deref())?;
        let rows = match &cfg.calibration {
            Some(p) => calibration::read_table(p)?,
            None => Vec::new(),
        };
        Self::new(cfg, arena, &rows)
    }

    pub fn new(cfg: SessionConfig, arena: Arena, calibration: &[CalibrationRow]) -> Result<Self> {
        cfg.validate()?;
        arena.validate()?;
        if world::collide(&cfg.start, cfg.footprint_mm, &arena) {
            return Err(ServiceError::Config("start pose collides with the arena".into()));
        }
        let mut calibrator = Calibrator::from_rows(calibration);
        let command = cfg.initial_command;
        let m = calibrator.m_for(command.frequency, &cfg.cpg)?;
        let program = GaitProgram::with_m(command.mode(), command.frequency, m)?;

        // Warm the oscillator up so tick 0 starts on the limit cycle.
        let mut cpg = CpgState::default();
        let mut history = DelayLine::for_tick_rate(cfg.tick_rate());
        for _ in 0..(WARM_UP_S * cfg.tick_rate()).ceil() as usize {
            cpg = oscillator::step(&cpg, &cfg.cpg, m);
            let (o1, o2) = cpg.outputs();
            history.push(oscillator::classify_region(o1, o2)?);
        }
        cpg.tick = 0;

        Ok(Self {
            speeds: SpeedTable::new(cfg.plant, cfg.pneumatic, cfg.drive),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            pose: cfg.start,
            cfg,
            arena,
            calibrator,
            cpg,
            history,
            program,
            command,
            pending: None,
            anterior: SegmentState::default(),
            posterior: SegmentState::default(),
            cycle: 0,
            cycle_started: false,
            tick: 0,
            status: Status::Running,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Calibration entries used so far.
    pub fn calibration(&self) -> Vec<CalibrationRow> {
        self.calibrator.rows()
    }

    /// Queues a command for the next tick; a later call before that tick
    /// replaces it.
    pub fn submit(&mut self, cmd: UserCommand) -> Result<()> {
        cmd.validate().map_err(ServiceError::Config)?;
        self.pending = Some(cmd);
        Ok(())
    }

    pub fn step(&mut self) -> Result<Snapshot> {
        if self.status == Status::Collided {
            return Err(ServiceError::Halted);
        }
        let tick_rate = self.cfg.tick_rate();
        let dt = 1.0 / tick_rate;
        if let Some(c) = self.pending.take() {
            self.command = c;
        }

        let (prev_o1, _) = self.cpg.outputs();
        self.cpg = oscillator::step(&self.cpg, &self.cfg.cpg, self.program.m);
        let (o1, o2) = self.cpg.outputs();
        let boundary = prev_o1 < 0.0 && o1 >= 0.0;
        if boundary {
            self.finish_cycle()?;
        }

        let sensors = if self.cfg.sensors.noise_mm > 0.0 {
            world::sense_noisy(&self.pose, &self.arena, &self.cfg.sensors, &mut self.rng)
        } else {
            world::sense(&self.pose, &self.arena, &self.cfg.sensors)
        };
        let decision: TeleopDecision = arbitrate(&self.command, sensors.d_l, sensors.d_r, &self.cfg.teleop);
        let stale = decision.effective != self.program.mode || self.command.frequency != self.program.frequency;
        if boundary && stale {
            let m = self.calibrator.m_for(self.command.frequency, &self.cfg.cpg)?;
            self.program = GaitProgram::with_m(decision.effective, self.command.frequency, m)?;
        }

        let region = oscillator::classify_region(o1, o2)?;
        self.history.push(region);
        let valves = self.program.evaluate(&self.history, tick_rate);
        let pneu = self.cfg.pneumatic;
        self.anterior = self.anterior.advance(valves.anterior(), dt, &pneu);
        self.posterior = self.posterior.advance(valves.posterior(), dt, &pneu);
        let f = self.program.frequency;
        let (ds, _) = self.cycle_increment()?;

        let l0 = self.cfg.plant.rest_length;
        let snap = Snapshot {
            tick: self.tick,
            t: (self.tick + 1) as f64 * dt,
            cycle: self.cycle,
            pose: self.pose,
            sensors,
            command: self.command,
            mode: decision.effective,
            gait: self.program.mode,
            frequency: f,
            alert: decision.alert,
            delta: decision.delta,
            cpg: [o1, o2],
            region,
            delayed_region: self.history.delayed(self.program.shift(), tick_rate).ok(),
            valves,
            anterior: SegmentTelemetry {
                pressure_kpa: self.anterior.pressure,
                length_mm: elongated_length(l0, pneu.eps_a_max, self.anterior.fraction),
            },
            posterior: SegmentTelemetry {
                pressure_kpa: self.posterior.pressure,
                length_mm: elongated_length(l0, pneu.eps_p_max, self.posterior.fraction),
            },
            speed: ds * f,
            status: self.status,
        };
        self.tick += 1;
        Ok(snap)
    }

    // Pose increment of one full cycle of the current gait.
    fn cycle_increment(&mut self) -> Result<(f64, f64)> {
        let mode = self.program.mode;
        let n = match mode {
            LocomotionMode::Idle => return Ok((0.0, 0.0)),
            LocomotionMode::Rectilinear(n) => n,
            // Steering gaits are scaled from straight crawling at a quarter
            // period lag.
            _ => 1,
        };
        let v = self.speeds.speed(n, self.program.frequency)?;
        Ok(world::cycle_outcome(mode, v, self.program.frequency, &self.cfg.planar))
    }

    fn finish_cycle(&mut self) -> Result<()> {
        if self.cycle_started {
            let (ds, dpsi) = self.cycle_increment()?;
            self.pose = world::advance_pose(self.pose, ds, dpsi);
            self.cycle += 1;
            if world::collide(&self.pose, self.cfg.footprint_mm, &self.arena) {
                log::info!("collision at cycle {} ({:.1}, {:.1})", self.cycle, self.pose.x, self.pose.y);
                self.status = Status::Collided;
            }
        }
        self.cycle_started = true;
        Ok(())
    }
}

pub fn load_arena(path: Option<&Path>) -> Result<Arena> {
    match path {
        Some(p) => Ok(Arena::from_json(&std::fs::read_to_string(p)?)?),
        None => Ok(Arena::unbounded()),
    }
}

/// Supplies operator commands, polled once per tick before it runs.
pub trait CommandSource {
    fn poll(&mut self, tick: u64, last: Option<&Snapshot>) -> Option<UserCommand>;
}

impl<F: FnMut(u64, Option<&Snapshot>) -> Option<UserCommand>> CommandSource for F {
    fn poll(&mut self, tick: u64, last: Option<&Snapshot>) -> Option<UserCommand> {
        self(tick, last)
    }
}

/// Fixed list of `(tick, command)` events.
#[derive(Debug, Clone, Default)]
pub struct Script {
    events: Vec<(u64, UserCommand)>,
    next: usize,
}

impl Script {
    pub fn new(mut events: Vec<(u64, UserCommand)>) -> Self {
        events.sort_by_key(|e| e.0);
        Self { events, next: 0 }
    }
}

impl CommandSource for Script {
    fn poll(&mut self, tick: u64, _: Option<&Snapshot>) -> Option<UserCommand> {
        let mut latest = None;
        while self.next < self.events.len() && self.events[self.next].0 <= tick {
            latest = Some(self.events[self.next].1);
            self.next += 1;
        }
        latest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub ticks: u64,
    pub status: Status,
    pub final_pose: Pose,
    /// Hex SHA-256 over the snapshot lines, each followed by a newline.
    pub snapshot_sha256: String,
}

/// Runs up to `max_ticks` ticks or until a collision. `on_tick` sees the
/// command applied at each tick, if any, and the resulting snapshot.
pub fn run_session(
    session: &mut Session,
    source: &mut dyn CommandSource,
    max_ticks: u64,
    mut on_tick: impl FnMut(Option<&UserCommand>, &Snapshot) -> Result<()>,
) -> Result<RunSummary> {
    let mut hasher = Sha256::new();
    let mut last: Option<Snapshot> = None;
    let mut ticks = 0;
    while ticks < max_ticks && session.status() == Status::Running {
        let cmd = source.poll(session.tick(), last.as_ref());
        if let Some(c) = cmd {
            session.submit(c)?;
        }
        let snap = session.step()?;
        hasher.update(snap.to_line().as_bytes());
        hasher.update(b"\n");
        on_tick(cmd.as_ref(), &snap)?;
        last = Some(snap);
        ticks += 1;
    }
    Ok(RunSummary {
        ticks,
        status: session.status(),
        final_pose: session.pose(),
        snapshot_sha256: hex::encode(hasher.finalize()),
    })
}

/// Writes snapshots as CSV rows with the main telemetry columns.
pub fn write_snapshot_csv<W: Write>(out: W, snaps: &[Snapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tick", "t", "cycle", "x", "y", "heading", "d_l", "d_r", "mode", "gait", "alert", "ar", "al", "pr", "pl", "l_a", "l_p",
        "speed", "status",
    ])?;
    for s in snaps {
        let mode = serde_json::to_string(&s.mode)?;
        let gait = serde_json::to_string(&s.gait)?;
        let alert = serde_json::to_string(&s.alert)?;
        let status = serde_json::to_string(&s.status)?;
        w.write_record([
            s.tick.to_string(),
            s.t.to_string(),
            s.cycle.to_string(),
            s.pose.x.to_string(),
            s.pose.y.to_string(),
            s.pose.heading.to_string(),
            s.sensors.d_l.to_string(),
            s.sensors.d_r.to_string(),
            mode,
            gait,
            alert,
            (s.valves.ar as u8).to_string(),
            (s.valves.al as u8).to_string(),
            (s.valves.pr as u8).to_string(),
            (s.valves.pl as u8).to_string(),
            s.anterior.length_mm.to_string(),
            s.posterior.length_mm.to_string(),
            s.speed.to_string(),
            status,
        ])?;
    }
    w.flush()?;
    Ok(())
}
