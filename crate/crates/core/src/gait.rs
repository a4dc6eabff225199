//! Gait tables: which chambers open in which regions of the oscillator cycle.
//!
//! Chambers are anterior-right, anterior-left, posterior-right and
//! posterior-left. Each gait gates every chamber on a set of regions, read
//! either from the current cycle or from a copy delayed by a whole number of
//! quarter periods.

use serde::{Deserialize, Serialize};

use crate::oscillator::{self, CpgParams, DelayLine, OscillatorError, PhaseShift, RegionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocomotionMode {
    /// Straight crawling; the posterior pair lags the anterior pair by `n`
    /// quarter periods.
    Rectilinear(u8),
    TurnLeft,
    TurnRight,
    /// Both posterior chambers plus one anterior chamber; sidewinds toward
    /// the active anterior chamber.
    WindingILeft,
    WindingIRight,
    /// Both anterior chambers plus one posterior chamber; steers away from
    /// the active posterior chamber.
    WindingIILeft,
    WindingIIRight,
    Idle,
}

impl LocomotionMode {
    pub const ALL_STEERING: [LocomotionMode; 6] = [
        LocomotionMode::TurnLeft,
        LocomotionMode::TurnRight,
        LocomotionMode::WindingILeft,
        LocomotionMode::WindingIRight,
        LocomotionMode::WindingIILeft,
        LocomotionMode::WindingIIRight,
    ];

    pub fn validate(self) -> Result<Self, OscillatorError> {
        match self {
            LocomotionMode::Rectilinear(n) if n > 3 => Err(OscillatorError::InvalidPhase(n)),
            m => Ok(m),
        }
    }

    /// Left/right mirror image.
    pub fn mirror(self) -> Self {
        use LocomotionMode::*;
        match self {
            TurnLeft => TurnRight,
            TurnRight => TurnLeft,
            WindingILeft => WindingIRight,
            WindingIRight => WindingILeft,
            WindingIILeft => WindingIIRight,
            WindingIIRight => WindingIILeft,
            m => m,
        }
    }

    /// Quarter periods by which the mode's delayed chambers lag.
    pub fn shift_quarters(self) -> u8 {
        use LocomotionMode::*;
        match self {
            Rectilinear(n) => n,
            TurnLeft | TurnRight => 2,
            WindingILeft | WindingIRight | WindingIILeft | WindingIIRight => 1,
            Idle => 0,
        }
    }
}

/// One on/off bit per chamber valve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ValveCommand {
    pub ar: bool,
    pub al: bool,
    pub pr: bool,
    pub pl: bool,
}

impl ValveCommand {
    pub const OFF: ValveCommand = ValveCommand { ar: false, al: false, pr: false, pl: false };

    pub fn mirror(self) -> Self {
        ValveCommand { ar: self.al, al: self.ar, pr: self.pl, pl: self.pr }
    }

    pub fn anterior(self) -> bool {
        self.ar || self.al
    }

    pub fn posterior(self) -> bool {
        self.pr || self.pl
    }

    pub fn as_array(self) -> [bool; 4] {
        [self.ar, self.al, self.pr, self.pl]
    }
}

fn half(r: RegionId) -> bool {
    matches!(r, RegionId::I | RegionId::II)
}

fn first(r: RegionId) -> bool {
    r == RegionId::I
}

/// Valve command for `mode` given the region of the current cycle `r0` and
/// the region of the mode's delayed cycle `r_shift`.
pub fn valve_table(mode: LocomotionMode, r0: RegionId, r_shift: RegionId) -> ValveCommand {
    use LocomotionMode::*;
    let (h0, hs, qs) = (half(r0), half(r_shift), first(r_shift));
    match mode {
        Rectilinear(_) => ValveCommand { ar: h0, al: h0, pr: hs, pl: hs },
        TurnRight => ValveCommand { ar: h0, pl: h0, al: qs, pr: qs },
        TurnLeft => ValveCommand { al: h0, pr: h0, ar: qs, pl: qs },
        WindingIRight => ValveCommand { pr: h0, pl: h0, ar: hs, al: false },
        WindingILeft => ValveCommand { pr: h0, pl: h0, al: hs, ar: false },
        WindingIILeft => ValveCommand { ar: h0, al: h0, pr: hs, pl: false },
        WindingIIRight => ValveCommand { ar: h0, al: h0, pl: hs, pr: false },
        Idle => ValveCommand::OFF,
    }
}

/// Small set of regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RegionSet(u8);

impl RegionSet {
    pub const EMPTY: RegionSet = RegionSet(0);
    pub const FIRST_QUARTER: RegionSet = RegionSet(0b0001);
    pub const FIRST_HALF: RegionSet = RegionSet(0b0011);

    pub fn contains(self, r: RegionId) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = RegionId> {
        RegionId::ALL.into_iter().filter(move |r| self.contains(*r))
    }
}

impl FromIterator<RegionId> for RegionSet {
    fn from_iter<I: IntoIterator<Item = RegionId>>(iter: I) -> Self {
        RegionSet(iter.into_iter().fold(0, |acc, r| acc | (1 << r.index())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChamberAssignment {
    pub regions: RegionSet,
    /// Lag in quarter periods.
    pub shift: u8,
}

impl ChamberAssignment {
    const OFF: ChamberAssignment = ChamberAssignment { regions: RegionSet::EMPTY, shift: 0 };

    fn half(shift: u8) -> Self {
        Self { regions: RegionSet::FIRST_HALF, shift }
    }

    fn quarter(shift: u8) -> Self {
        Self { regions: RegionSet::FIRST_QUARTER, shift }
    }
}

/// Per-chamber assignments in `[ar, al, pr, pl]` order.
pub fn chamber_assignments(mode: LocomotionMode) -> [ChamberAssignment; 4] {
    use LocomotionMode::*;
    let s = mode.shift_quarters();
    let (h0, hs, qs, off) =
        (ChamberAssignment::half(0), ChamberAssignment::half(s), ChamberAssignment::quarter(s), ChamberAssignment::OFF);
    match mode {
        Rectilinear(_) => [h0, h0, hs, hs],
        TurnRight => [h0, qs, qs, h0],
        TurnLeft => [qs, h0, h0, qs],
        WindingIRight => [hs, off, h0, h0],
        WindingILeft => [off, hs, h0, h0],
        WindingIILeft => [h0, h0, hs, off],
        WindingIIRight => [h0, h0, off, hs],
        Idle => [off; 4],
    }
}

/// Everything the tick loop needs to run one gait.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitProgram {
    pub mode: LocomotionMode,
    pub frequency: f64,
    /// Modulatory input that makes the oscillator run at `frequency`.
    pub m: f64,
    pub chambers: [ChamberAssignment; 4],
}

impl GaitProgram {
    pub fn with_m(mode: LocomotionMode, frequency: f64, m: f64) -> Result<Self, OscillatorError> {
        let mode = mode.validate()?;
        if !(oscillator::F_MIN..=oscillator::F_MAX).contains(&frequency) {
            return Err(OscillatorError::OutOfRange(frequency));
        }
        Ok(Self { mode, frequency, m, chambers: chamber_assignments(mode) })
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn shift(&self) -> PhaseShift {
        PhaseShift::new(self.mode.shift_quarters(), self.period()).expect("validated mode")
    }

    /// Valve command from a region history whose newest entry is the current
    /// region. Delayed chambers read "off" until the history is long enough.
    pub fn evaluate(&self, history: &DelayLine<RegionId>, tick_rate: f64) -> ValveCommand {
        let bit = |a: &ChamberAssignment| {
            let shift = PhaseShift::new(a.shift, self.period()).expect("shift in 0..=3");
            history.delayed(shift, tick_rate).map(|r| a.regions.contains(r)).unwrap_or(false)
        };
        let [ar, al, pr, pl] = self.chambers.each_ref().map(bit);
        ValveCommand { ar, al, pr, pl }
    }
}

/// Calibrates the oscillator for `f` and assembles the program for `mode`.
pub fn plan(mode: LocomotionMode, f: f64, params: &CpgParams) -> Result<GaitProgram, OscillatorError> {
    let m = oscillator::calibrate(f, params)?;
    GaitProgram::with_m(mode, f, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LocomotionMode::*;
    use RegionId::*;

    fn all_modes() -> Vec<LocomotionMode> {
        let mut v: Vec<_> = (0..4).map(Rectilinear).collect();
        v.extend(LocomotionMode::ALL_STEERING);
        v.push(Idle);
        v
    }

    #[test]
    fn rectilinear_in_phase_all_on() {
        assert_eq!(valve_table(Rectilinear(1), I, I), ValveCommand { ar: true, al: true, pr: true, pl: true });
    }

    #[test]
    fn rectilinear_second_half_all_off() {
        assert_eq!(valve_table(Rectilinear(1), III, IV), ValveCommand::OFF);
    }

    #[test]
    fn turn_right_first_quarter() {
        assert_eq!(valve_table(TurnRight, I, I), ValveCommand { ar: true, al: true, pr: true, pl: true });
        // The delayed pair only fires in region I.
        assert_eq!(valve_table(TurnRight, II, II), ValveCommand { ar: true, pl: true, al: false, pr: false });
    }

    #[test]
    fn mirror_symmetry_of_table() {
        for mode in all_modes() {
            for r0 in RegionId::ALL {
                for rs in RegionId::ALL {
                    assert_eq!(valve_table(mode.mirror(), r0, rs), valve_table(mode, r0, rs).mirror(), "{mode:?}");
                }
            }
        }
    }

    #[test]
    fn assignments_agree_with_table() {
        for mode in all_modes() {
            let a = chamber_assignments(mode);
            for r0 in RegionId::ALL {
                // With no lag the delayed cycle is the current one.
                let delayed: Vec<RegionId> = if mode.shift_quarters() == 0 { vec![r0] } else { RegionId::ALL.to_vec() };
                for rs in delayed {
                    let pick = |c: &ChamberAssignment| c.regions.contains(if c.shift == 0 { r0 } else { rs });
                    let [ar, al, pr, pl] = a.each_ref().map(pick);
                    assert_eq!(ValveCommand { ar, al, pr, pl }, valve_table(mode, r0, rs), "{mode:?} {r0:?} {rs:?}");
                }
            }
        }
    }

    #[test]
    fn plan_rectilinear_zero_shift() {
        let p = GaitProgram::with_m(Rectilinear(0), 0.5, 0.05).unwrap();
        for c in p.chambers {
            assert_eq!(c.regions, RegionSet::FIRST_HALF);
            assert_eq!(c.shift, 0);
        }
    }

    #[test]
    fn plan_idle_is_empty() {
        let p = GaitProgram::with_m(Idle, 1.0, 0.1).unwrap();
        assert!(p.chambers.iter().all(|c| c.regions.is_empty()));
    }

    #[test]
    fn plan_turn_left() {
        let p = GaitProgram::with_m(TurnLeft, 0.5, 0.05).unwrap();
        let [ar, al, pr, pl] = p.chambers;
        assert_eq!(al, ChamberAssignment { regions: RegionSet::FIRST_HALF, shift: 0 });
        assert_eq!(pr, ChamberAssignment { regions: RegionSet::FIRST_HALF, shift: 0 });
        assert_eq!(ar, ChamberAssignment { regions: RegionSet::FIRST_QUARTER, shift: 2 });
        assert_eq!(pl, ChamberAssignment { regions: RegionSet::FIRST_QUARTER, shift: 2 });
    }

    #[test]
    fn plan_rejects_bad_inputs() {
        assert!(GaitProgram::with_m(Rectilinear(4), 0.5, 0.05).is_err());
        assert_eq!(
            plan(Rectilinear(1), 3.0, &CpgParams::default()).unwrap_err(),
            OscillatorError::OutOfRange(3.0)
        );
    }

    #[test]
    fn region_set_collects() {
        let s: RegionSet = [I, III].into_iter().collect();
        assert!(s.contains(I) && s.contains(III) && !s.contains(II));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![I, III]);
    }
}
