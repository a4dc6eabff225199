//! Two-neuron discrete-time SO(2) oscillator.
//!
//! The network keeps two activations `a1`, `a2` and emits `o_i = tanh(a_i)`.
//! Each tick applies
//!
//! ```text
//! a1' =  w0·o1 + (w1 + m)·o2
//! a2' = -(w1 + m)·o1 + w0·o2
//! ```
//!
//! The weight matrix is a scaled rotation, so the outputs circle the origin
//! with a frequency set by the modulatory input `m`. Below a critical `m`
//! the orbit collapses onto fixed points and the network stops oscillating.
//!
//! The rest of this module turns that rhythm into control signals: frequency
//! measurement, calibration of `m` for a target frequency, the quadrant
//! labels I-IV used to gate valves, and a delay line for phase shifts.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest actuation frequency the controller accepts, in Hz.
pub const F_MIN: f64 = 0.1;
/// Highest actuation frequency the controller accepts, in Hz.
pub const F_MAX: f64 = 1.5;
/// Default control-loop rate, in Hz.
pub const DEFAULT_TICK_RATE: f64 = 50.0;
/// Seconds of oscillator output discarded before measuring or gating.
pub const WARM_UP_S: f64 = 2.0;
/// Search interval for the modulatory input during calibration.
pub const M_SEARCH: (f64, f64) = (1e-4, 1.0);

const PEAK_GAPS: usize = 10;
const PROMINENCE_FRACTION: f64 = 0.1;
// Calibration stops once the closed-loop frequency is inside this band; half
// of the 1% contract so that an independent re-measurement also passes.
const CALIBRATION_REL_TOL: f64 = 0.005;
const CALIBRATION_MAX_ITER: usize = 80;
const SEED: (f64, f64) = (0.01, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscillatorError {
    #[error("found {found} peaks, need at least {needed}")]
    InsufficientPeaks { found: usize, needed: usize },
    #[error("target frequency {0} Hz outside [{F_MIN}, {F_MAX}] Hz")]
    OutOfRange(f64),
    #[error("calibration for {target} Hz did not converge (best {best} Hz at m = {m})")]
    NoConvergence { target: f64, best: f64, m: f64 },
    #[error("both outputs are zero; region undefined")]
    Degenerate,
    #[error("delay of {needed} ticks but only {available} samples recorded")]
    Underfilled { needed: usize, available: usize },
    #[error("invalid oscillator parameter: {0}")]
    InvalidParams(&'static str),
    #[error("phase index {0} outside 0..=3")]
    InvalidPhase(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgParams {
    /// Self-weight `w11 = w22`.
    pub w0: f64,
    /// Base cross-weight; the effective cross-weight is `w1 + m`.
    pub w1: f64,
    /// Control-loop update rate in Hz.
    pub tick_rate: f64,
}

impl Default for CpgParams {
    fn default() -> Self {
        Self { w0: 1.3, w1: 0.1, tick_rate: DEFAULT_TICK_RATE }
    }
}

impl CpgParams {
    pub fn validate(&self) -> Result<(), OscillatorError> {
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(OscillatorError::InvalidParams("w0 must be positive"));
        }
        if !self.w1.is_finite() {
            return Err(OscillatorError::InvalidParams("w1 must be finite"));
        }
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return Err(OscillatorError::InvalidParams("tick_rate must be positive"));
        }
        Ok(())
    }

    fn warm_up_ticks(&self) -> usize {
        (WARM_UP_S * self.tick_rate).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgState {
    pub a1: f64,
    pub a2: f64,
    pub tick: u64,
}

impl Default for CpgState {
    /// Small off-origin seed; the origin itself is a fixed point.
    fn default() -> Self {
        Self::new(SEED.0, SEED.1)
    }
}

impl CpgState {
    pub fn new(a1: f64, a2: f64) -> Self {
        Self { a1, a2, tick: 0 }
    }

    pub fn outputs(&self) -> (f64, f64) {
        (self.a1.tanh(), self.a2.tanh())
    }
}

/// Advances the oscillator by one tick.
pub fn step(state: &CpgState, params: &CpgParams, m: f64) -> CpgState {
    let (o1, o2) = state.outputs();
    let cross = params.w1 + m;
    CpgState {
        a1: params.w0 * o1 + cross * o2,
        a2: -cross * o1 + params.w0 * o2,
        tick: state.tick + 1,
    }
}

/// Runs the oscillator from the default seed and returns `ticks` samples of
/// `(o1, o2)` after discarding the warm-up interval.
pub fn run_outputs(params: &CpgParams, m: f64, ticks: usize) -> Vec<(f64, f64)> {
    let mut state = CpgState::default();
    for _ in 0..params.warm_up_ticks() {
        state = step(&state, params, m);
    }
    let mut out = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        out.push(state.outputs());
        state = step(&state, params, m);
    }
    out
}

/// Estimates the dominant frequency of `series` from the spacing of its
/// peaks, averaged over the last ten successive peak gaps.
///
/// A peak is a local maximum whose topographic prominence is at least a
/// tenth of the signal range. Peak positions are refined to sub-sample
/// accuracy by fitting a parabola through the three samples around each
/// maximum.
pub fn measure_frequency(series: &[f64], tick_rate: f64) -> Result<f64, OscillatorError> {
    let needed = PEAK_GAPS + 1;
    let peaks = find_peaks(series);
    if peaks.len() < needed {
        return Err(OscillatorError::InsufficientPeaks { found: peaks.len(), needed });
    }
    let tail = &peaks[peaks.len() - needed..];
    let mean_gap = (tail[PEAK_GAPS] - tail[0]) / PEAK_GAPS as f64;
    Ok(tick_rate / mean_gap)
}

fn find_peaks(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n < 3 {
        return Vec::new();
    }
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Vec::new();
    }
    let threshold = PROMINENCE_FRACTION * range;

    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        let y = series[i];
        if !(y > series[i - 1] && y >= series[i + 1]) {
            continue;
        }
        if prominence(series, i) < threshold {
            continue;
        }
        let (l, r) = (series[i - 1], series[i + 1]);
        let denom = l - 2.0 * y + r;
        let offset = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
        peaks.push(i as f64 + offset);
    }
    peaks
}

fn prominence(series: &[f64], i: usize) -> f64 {
    let y = series[i];
    let mut left_min = y;
    for &v in series[..i].iter().rev() {
        if v > y {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = y;
    for &v in &series[i + 1..] {
        if v > y {
            break;
        }
        right_min = right_min.min(v);
    }
    y - left_min.max(right_min)
}

/// Closed-loop frequency of the oscillator at modulatory input `m`, measured
/// over enough ticks to see eleven peaks at `reference_hz`.
pub fn cpg_frequency(params: &CpgParams, m: f64, reference_hz: f64) -> Result<f64, OscillatorError> {
    let ticks = ((PEAK_GAPS as f64 + 3.0) / reference_hz * params.tick_rate).ceil() as usize;
    let o1: Vec<f64> = run_outputs(params, m, ticks).into_iter().map(|(o1, _)| o1).collect();
    measure_frequency(&o1, params.tick_rate)
}

/// Finds the modulatory input that makes the oscillator run at `f_target`.
///
/// Bisection over `m` on the measured frequency; a probe that yields too few
/// peaks counts as slower than the target.
pub fn calibrate(f_target: f64, params: &CpgParams) -> Result<f64, OscillatorError> {
    params.validate()?;
    if !(F_MIN..=F_MAX).contains(&f_target) {
        return Err(OscillatorError::OutOfRange(f_target));
    }
    let measure = |m: f64| cpg_frequency(params, m, f_target).unwrap_or(0.0);

    let (mut lo, mut hi) = M_SEARCH;
    let mut best = (f64::NAN, f64::INFINITY, 0.0);
    for _ in 0..CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f = measure(mid);
        let err = (f - f_target).abs() / f_target;
        if err < best.1 {
            best = (mid, err, f);
        }
        if err <= CALIBRATION_REL_TOL {
            return Ok(mid);
        }
        if f < f_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(OscillatorError::NoConvergence { target: f_target, best: best.2, m: best.0 })
}

/// Quarter of the oscillator cycle, in the order the outputs visit them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionId {
    I,
    II,
    III,
    IV,
}

impl RegionId {
    pub const ALL: [RegionId; 4] = [RegionId::I, RegionId::II, RegionId::III, RegionId::IV];

    pub fn next(self) -> RegionId {
        match self {
            RegionId::I => RegionId::II,
            RegionId::II => RegionId::III,
            RegionId::III => RegionId::IV,
            RegionId::IV => RegionId::I,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Labels the sign quadrant of `(o1, o2)`.
///
/// With a positive cross-weight the outputs rotate clockwise, so starting at
/// the positive-going zero crossing of `o1` they visit `(+,+)`, `(+,-)`,
/// `(-,-)`, `(-,+)`, labelled I to IV. A point on an axis belongs to the
/// quadrant being entered. Regions I and II together are the half-cycle
/// where `o1 > 0`.
pub fn classify_region(o1: f64, o2: f64) -> Result<RegionId, OscillatorError> {
    match (o1, o2) {
        (a, b) if a >= 0.0 && b > 0.0 => Ok(RegionId::I),
        (a, b) if a > 0.0 && b <= 0.0 => Ok(RegionId::II),
        (a, b) if a <= 0.0 && b < 0.0 => Ok(RegionId::III),
        (a, b) if a < 0.0 && b >= 0.0 => Ok(RegionId::IV),
        _ => Err(OscillatorError::Degenerate),
    }
}

/// Phase shift of `n` quarter periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseShift {
    n: u8,
    period: f64,
}

impl PhaseShift {
    pub fn new(n: u8, period: f64) -> Result<Self, OscillatorError> {
        if n > 3 {
            return Err(OscillatorError::InvalidPhase(n));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(OscillatorError::InvalidParams("period must be positive"));
        }
        Ok(Self { n, period })
    }

    pub fn from_frequency(n: u8, f: f64) -> Result<Self, OscillatorError> {
        if !(F_MIN..=F_MAX).contains(&f) {
            return Err(OscillatorError::OutOfRange(f));
        }
        Self::new(n, 1.0 / f)
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Shift as a time in seconds.
    pub fn seconds(&self) -> f64 {
        self.n as f64 * self.period / 4.0
    }

    /// Shift as a phase angle, `n·π/2`.
    pub fn radians(&self) -> f64 {
        self.n as f64 * FRAC_PI_2
    }

    pub fn delay_ticks(&self, tick_rate: f64) -> usize {
        quarter_delay_ticks(self.n as u32, self.period, tick_rate)
    }
}

/// `⌊quarters·T/4·tick_rate⌋`, allowing any number of quarter periods.
pub fn quarter_delay_ticks(quarters: u32, period: f64, tick_rate: f64) -> usize {
    // The small epsilon keeps exact products such as 2·2/4·50 from landing
    // one ulp below the integer.
    (quarters as f64 * period / 4.0 * tick_rate + 1e-9).floor() as usize
}

/// Fixed-capacity history of per-tick samples, newest last.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    samples: VecDeque<T>,
    capacity: usize,
}

impl<T: Copy> DelayLine<T> {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self { samples: VecDeque::with_capacity(capacity), capacity }
    }

    /// History sized for the largest phase shift at the slowest frequency.
    pub fn for_tick_rate(tick_rate: f64) -> Self {
        Self::new(quarter_delay_ticks(4, 1.0 / F_MIN, tick_rate) + 1)
    }

    pub fn push(&mut self, sample: T) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    /// The sample recorded `ticks` pushes ago; 0 is the newest.
    pub fn ago(&self, ticks: usize) -> Result<T, OscillatorError> {
        let available = self.samples.len();
        if ticks >= available {
            return Err(OscillatorError::Underfilled { needed: ticks, available });
        }
        Ok(self.samples[available - 1 - ticks])
    }

    /// The sample delayed by `shift`. During warm-up this returns
    /// [`OscillatorError::Underfilled`]; callers treat that as "off".
    pub fn delayed(&self, shift: PhaseShift, tick_rate: f64) -> Result<T, OscillatorError> {
        self.ago(shift.delay_ticks(tick_rate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn origin_is_fixed() {
        let s = step(&CpgState::new(0.0, 0.0), &CpgParams::default(), 0.2);
        assert_eq!((s.a1, s.a2), (0.0, 0.0));
        assert_eq!(s.tick, 1);
    }

    #[test]
    fn hand_evaluated_step() {
        let p = CpgParams { w0: 1.3, w1: 0.1, tick_rate: 50.0 };
        let s = step(&CpgState::new(0.1, 0.1), &p, 0.0);
        // tanh(0.1) = 0.0996680; 1.4·t and 1.2·t
        assert!((s.a1 - 0.139535).abs() < 1e-6, "{}", s.a1);
        assert!((s.a2 - 0.119602).abs() < 1e-6, "{}", s.a2);
    }

    #[test]
    fn oscillation_persists_and_stays_bounded() {
        let p = CpgParams::default();
        let mut s = CpgState::new(0.01, 0.0);
        let mut late_max: f64 = 0.0;
        for i in 0..10_000 {
            s = step(&s, &p, 0.05);
            let (o1, o2) = s.outputs();
            assert!(o1.abs() < 1.0 && o2.abs() < 1.0);
            if i > 9_000 {
                late_max = late_max.max(o1.abs());
            }
        }
        assert!(late_max > 0.5, "oscillation decayed: {late_max}");
    }

    #[test]
    fn measures_synthetic_sinusoid() {
        let series: Vec<f64> = (0..1500).map(|i| (2.0 * PI * 0.5 * i as f64 / 50.0).sin()).collect();
        let f = measure_frequency(&series, 50.0).unwrap();
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }

    #[test]
    fn zero_series_has_no_peaks() {
        let err = measure_frequency(&[0.0; 1000], 50.0).unwrap_err();
        assert_eq!(err, OscillatorError::InsufficientPeaks { found: 0, needed: 11 });
    }

    #[test]
    fn small_ripples_are_not_peaks() {
        // 0.5 Hz carrier with 5% jitter at 10 Hz: only carrier peaks count.
        let series: Vec<f64> = (0..1500)
            .map(|i| {
                let t = i as f64 / 50.0;
                (2.0 * PI * 0.5 * t).sin() + 0.05 * (2.0 * PI * 10.0 * t).sin()
            })
            .collect();
        let f = measure_frequency(&series, 50.0).unwrap();
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }

    #[test]
    fn calibrate_rejects_out_of_range() {
        let p = CpgParams::default();
        assert_eq!(calibrate(2.0, &p), Err(OscillatorError::OutOfRange(2.0)));
        assert_eq!(calibrate(0.05, &p), Err(OscillatorError::OutOfRange(0.05)));
    }

    #[test]
    fn calibrate_half_hertz_closes_loop() {
        let p = CpgParams::default();
        let m = calibrate(0.5, &p).unwrap();
        let f = cpg_frequency(&p, m, 0.5).unwrap();
        assert!((f - 0.5).abs() <= 0.005, "{f}");
    }

    #[test]
    fn degenerate_region() {
        assert_eq!(classify_region(0.0, 0.0), Err(OscillatorError::Degenerate));
    }

    #[test]
    fn axis_points_belong_to_entered_quadrant() {
        assert_eq!(classify_region(0.0, 0.5), Ok(RegionId::I));
        assert_eq!(classify_region(0.5, 0.0), Ok(RegionId::II));
        assert_eq!(classify_region(0.0, -0.5), Ok(RegionId::III));
        assert_eq!(classify_region(-0.5, 0.0), Ok(RegionId::IV));
    }

    #[test]
    fn zero_shift_is_identity() {
        let mut line = DelayLine::new(8);
        line.push(false);
        line.push(true);
        let shift = PhaseShift::new(0, 2.0).unwrap();
        assert_eq!(line.delayed(shift, 50.0), Ok(true));
    }

    #[test]
    fn half_period_shift_at_two_seconds() {
        let shift = PhaseShift::new(2, 2.0).unwrap();
        assert_eq!(shift.delay_ticks(50.0), 50);
        let mut line = DelayLine::new(200);
        for i in 0..120u32 {
            line.push(i);
        }
        assert_eq!(line.delayed(shift, 50.0), Ok(119 - 50));
    }

    #[test]
    fn underfilled_before_warm_up() {
        let mut line = DelayLine::new(200);
        line.push(true);
        let shift = PhaseShift::new(1, 2.0).unwrap();
        assert_eq!(
            line.delayed(shift, 50.0),
            Err(OscillatorError::Underfilled { needed: 25, available: 1 })
        );
    }

    #[test]
    fn phase_index_bounds() {
        assert_eq!(PhaseShift::new(4, 1.0), Err(OscillatorError::InvalidPhase(4)));
        assert!(PhaseShift::from_frequency(1, 2.0).is_err());
        let s = PhaseShift::from_frequency(3, 0.5).unwrap();
        assert!((s.seconds() - 1.5).abs() < 1e-12);
        assert!((s.radians() - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn capacity_covers_slowest_full_period() {
        let line: DelayLine<bool> = DelayLine::for_tick_rate(50.0);
        assert_eq!(line.capacity, 501);
    }
}
