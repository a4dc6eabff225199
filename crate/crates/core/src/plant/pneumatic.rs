//! Valve-driven link lengths.
//!
//! Each body segment has one pressure. It fills toward the supply pressure
//! while any of the segment's chamber valves is open and vents toward zero
//! otherwise, both as first-order lags. Elongation follows pressure with
//! hysteresis: it only starts once pressure exceeds the inflation threshold,
//! and on venting it holds until pressure falls below the deflation threshold.

use serde::{Deserialize, Serialize};

use super::LinkDrive;
use crate::gait::ValveCommand;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PneumaticParams {
    /// Supply pressure, kPa.
    pub p_max: f64,
    /// Pressure above which elongation starts, kPa.
    pub p_i: f64,
    /// Pressure below which a vented segment starts to contract, kPa.
    pub p_d: f64,
    /// Anterior elongation at full inflation, percent.
    pub eps_a_max: f64,
    /// Posterior elongation at full inflation, percent.
    pub eps_p_max: f64,
    /// Smallest elongation that opens the skin folds, percent.
    pub eps_min: f64,
    /// Fill time constant, s.
    pub tau_fill: f64,
    /// Vent time constant, s.
    pub tau_vent: f64,
}

impl Default for PneumaticParams {
    fn default() -> Self {
        Self {
            p_max: 140.0,
            p_i: 60.0,
            p_d: 50.0,
            eps_a_max: 60.0,
            eps_p_max: 74.0,
            eps_min: 15.0,
            tau_fill: 0.2,
            tau_vent: 0.2,
        }
    }
}

impl PneumaticParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(0.0 < self.p_d && self.p_d < self.p_i && self.p_i < self.p_max) {
            return Err("pressures must satisfy 0 < p_d < p_i < p_max");
        }
        if !(self.eps_min > 0.0 && self.eps_min < self.eps_a_max && self.eps_min < self.eps_p_max) {
            return Err("eps_min must be positive and below both segment maxima");
        }
        if !(self.tau_fill > 0.0 && self.tau_vent > 0.0) {
            return Err("time constants must be positive");
        }
        Ok(())
    }

    fn ramp_up(&self, p: f64) -> f64 {
        ((p - self.p_i) / (self.p_max - self.p_i)).clamp(0.0, 1.0)
    }

    fn ramp_down(&self, p: f64) -> f64 {
        (p / self.p_d).clamp(0.0, 1.0)
    }
}

/// Pressure and elongation fraction of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentState {
    /// kPa.
    pub pressure: f64,
    /// Share of the segment's maximum elongation, in `[0, 1]`.
    pub fraction: f64,
    pub open: bool,
}

impl SegmentState {
    /// State after `dt` seconds with the valve held at `open`, starting from
    /// `self`. Exact for piecewise-constant valve signals.
    pub fn advance(&self, open: bool, dt: f64, pneu: &PneumaticParams) -> SegmentState {
        // A valve change resets the hysteresis anchor to the current fraction.
        let anchor = self.fraction;
        if open {
            let p = pneu.p_max + (self.pressure - pneu.p_max) * (-dt / pneu.tau_fill).exp();
            SegmentState { pressure: p, fraction: anchor.max(pneu.ramp_up(p)), open }
        } else {
            let p = self.pressure * (-dt / pneu.tau_vent).exp();
            SegmentState { pressure: p, fraction: anchor.min(pneu.ramp_down(p)), open }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    t: f64,
    state: SegmentState,
}

/// Piecewise-constant valve history of one segment, evaluable at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentHistory {
    events: Vec<Event>,
}

impl SegmentHistory {
    /// Builds the history from `(time, open)` switch points. Times must be
    /// non-decreasing; the valve is closed before the first entry.
    pub fn from_switches(switches: &[(f64, bool)], pneu: &PneumaticParams) -> Self {
        let mut events = vec![Event { t: 0.0, state: SegmentState::default() }];
        for &(t, open) in switches {
            let last = *events.last().expect("non-empty");
            if open == last.state.open {
                continue;
            }
            let t = t.max(last.t);
            let mut state = last.state.advance(last.state.open, t - last.t, pneu);
            state.open = open;
            events.push(Event { t, state });
        }
        Self { events }
    }

    pub fn state_at(&self, t: f64, pneu: &PneumaticParams) -> SegmentState {
        let idx = self.events.partition_point(|e| e.t <= t).saturating_sub(1);
        let e = self.events[idx];
        e.state.advance(e.state.open, (t - e.t).max(0.0), pneu)
    }
}

/// Link lengths produced by valve commands through the pneumatic model.
#[derive(Debug, Clone, PartialEq)]
pub struct PneumaticDrive {
    pub pneu: PneumaticParams,
    /// Undeformed link length, mm.
    pub rest_length: f64,
    anterior: SegmentHistory,
    posterior: SegmentHistory,
}

impl PneumaticDrive {
    pub fn new(pneu: PneumaticParams, rest_length: f64, anterior: SegmentHistory, posterior: SegmentHistory) -> Self {
        Self { pneu, rest_length, anterior, posterior }
    }

    /// Drive from one valve command per control tick, tick `i` covering
    /// `[i/tick_rate, (i+1)/tick_rate)`.
    pub fn from_ticks(commands: &[ValveCommand], tick_rate: f64, pneu: PneumaticParams, rest_length: f64) -> Self {
        let switches = |pick: fn(&ValveCommand) -> bool| -> Vec<(f64, bool)> {
            commands.iter().enumerate().map(|(i, c)| (i as f64 / tick_rate, pick(c))).collect()
        };
        let anterior = SegmentHistory::from_switches(&switches(|c| c.anterior()), &pneu);
        let posterior = SegmentHistory::from_switches(&switches(|c| c.posterior()), &pneu);
        Self::new(pneu, rest_length, anterior, posterior)
    }

    /// Square-wave schedule for straight crawling: the anterior segment is
    /// open for the first half of every period and the posterior segment
    /// follows `lag` seconds later.
    pub fn square_wave(frequency: f64, lag: f64, duration: f64, pneu: PneumaticParams, rest_length: f64) -> Self {
        let period = 1.0 / frequency;
        let wave = |offset: f64| {
            let mut s = Vec::new();
            let mut k = 0usize;
            loop {
                let start = offset + k as f64 * period;
                if start > duration {
                    break;
                }
                s.push((start, true));
                s.push((start + 0.5 * period, false));
                k += 1;
            }
            SegmentHistory::from_switches(&s, &pneu)
        };
        Self::new(pneu, rest_length, wave(0.0), wave(lag))
    }

    pub fn segments_at(&self, t: f64) -> (SegmentState, SegmentState) {
        (self.anterior.state_at(t, &self.pneu), self.posterior.state_at(t, &self.pneu))
    }
}

/// Link length in mm for a segment at `fraction` of its `eps_max` percent.
pub fn elongated_length(rest_length: f64, eps_max: f64, fraction: f64) -> f64 {
    rest_length * (1.0 + eps_max / 100.0 * fraction)
}

/// `(L_A, L_P)` in mm at time `t` from the valve histories.
pub fn valve_to_lengths(drive: &PneumaticDrive, t: f64) -> (f64, f64) {
    let (a, p) = drive.segments_at(t);
    (
        elongated_length(drive.rest_length, drive.pneu.eps_a_max, a.fraction),
        elongated_length(drive.rest_length, drive.pneu.eps_p_max, p.fraction),
    )
}

impl LinkDrive for PneumaticDrive {
    fn lengths(&self, t: f64) -> (f64, f64) {
        valve_to_lengths(self, t)
    }
}
