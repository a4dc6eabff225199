//! Three-node crawler body.
//!
//! Posterior (P), middle (M) and anterior (A) point masses slide on a line.
//! Two springs of stiffness `k` join them; their rest lengths `L_P(t)` and
//! `L_A(t)` are imposed by the actuation. Every node feels Coulomb friction
//! whose coefficient depends on the sliding direction and varies linearly
//! with the local link elongation:
//!
//! ```text
//! F_i   = -mu_i(L, v_i) · m_i · g · tanh(sigma · v_i)
//! F_PM  = k (x_M - x_P - L_P)
//! F_MA  = k (x_A - x_M - L_A)
//! m_P a_P = F_P + F_PM
//! m_M a_M = F_M - F_PM + F_MA
//! m_A a_A = F_A - F_MA
//! ```
//!
//! Positions are in metres, link lengths in millimetres.

pub mod integrator;
pub mod pneumatic;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use integrator::{DormandPrince, IntegratorError, StepStats, Tolerances};

const MM: f64 = 1e-3;
/// Output samples per actuation period.
pub const SAMPLES_PER_PERIOD: usize = 100;
/// Cycles averaged by [`steady_speed`].
pub const AVERAGED_CYCLES: f64 = 5.0;
/// Cycles a trajectory must span for [`steady_speed`].
pub const MIN_CYCLES: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("solver failed: {0}")]
    Stiffness(#[from] IntegratorError),
    #[error("trajectory spans {cycles:.2} cycles, need {MIN_CYCLES}")]
    TooShort { cycles: f64 },
    #[error("invalid plant parameter: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Undeformed link length, mm.
    pub rest_length: f64,
    /// Elongation amplitude, mm.
    pub amplitude: f64,
    /// Actuation frequency, Hz.
    pub frequency: f64,
    /// Lag of the posterior link behind the anterior one, radians.
    pub phi: f64,
    /// Link stiffness, N/m.
    pub k: f64,
    /// Node masses (posterior, middle, anterior), kg.
    pub masses: [f64; 3],
    pub mu_f1: f64,
    pub mu_f2: f64,
    pub mu_b1: f64,
    pub mu_b2: f64,
    /// m/s².
    pub g: f64,
    /// Sharpness of the `tanh` sign approximation, s/m.
    pub sigma: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            rest_length: 100.0,
            amplitude: 30.0,
            frequency: 0.5,
            phi: 0.0,
            k: 100.0,
            masses: [0.06; 3],
            mu_f1: 0.15,
            mu_f2: 0.2,
            mu_b1: 0.5,
            mu_b2: 0.2,
            g: 9.81,
            sigma: 50.0,
        }
    }
}

impl PlantParams {
    /// Same parameters with the posterior lagging `n` quarter periods.
    pub fn with_phase_index(self, n: u8) -> Self {
        Self { phi: n as f64 * FRAC_PI_2, ..self }
    }

    /// Same parameters with the backward endpoints set to the forward ones.
    pub fn with_symmetric_friction(self) -> Self {
        Self { mu_b1: self.mu_f1, mu_b2: self.mu_f2, ..self }
    }

    /// Forward and backward endpoints exchanged.
    pub fn with_swapped_friction(self) -> Self {
        Self { mu_f1: self.mu_b1, mu_f2: self.mu_b2, mu_b1: self.mu_f1, mu_b2: self.mu_f2, ..self }
    }

    pub fn without_friction(self) -> Self {
        Self { mu_f1: 0.0, mu_f2: 0.0, mu_b1: 0.0, mu_b2: 0.0, ..self }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Phase lag expressed in seconds.
    pub fn lag_seconds(&self) -> f64 {
        self.phi / (2.0 * PI * self.frequency)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let positive = [self.rest_length, self.amplitude, self.frequency, self.k, self.g, self.sigma];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(PlantError::InvalidParams("lengths, frequency, k, g and sigma must be positive"));
        }
        if self.masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(PlantError::InvalidParams("masses must be positive"));
        }
        if [self.mu_f1, self.mu_f2, self.mu_b1, self.mu_b2].iter().any(|m| !(*m >= 0.0)) {
            return Err(PlantError::InvalidParams("friction endpoints must be non-negative"));
        }
        if !self.phi.is_finite() {
            return Err(PlantError::InvalidParams("phi must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Node positions (posterior, middle, anterior), m.
    pub x: [f64; 3],
    /// Node velocities, m/s.
    pub v: [f64; 3],
    pub t: f64,
}

impl PlantState {
    /// Nodes at rest with spacings equal to the undeformed link length.
    pub fn at_rest(params: &PlantParams) -> Self {
        let l = params.rest_length * MM;
        Self { x: [0.0, l, 2.0 * l], v: [0.0; 3], t: 0.0 }
    }

    pub fn translated(mut self, dx: f64) -> Self {
        for x in &mut self.x {
            *x += dx;
        }
        self
    }

    pub fn mean_position(&self) -> f64 {
        self.x.iter().sum::<f64>() / 3.0
    }
}

/// Source of the imposed link lengths `(L_A, L_P)` in mm.
pub trait LinkDrive {
    fn lengths(&self, t: f64) -> (f64, f64);
}

impl<D: LinkDrive + ?Sized> LinkDrive for &D {
    fn lengths(&self, t: f64) -> (f64, f64) {
        (**self).lengths(t)
    }
}

/// Cosine elongation of both links, the posterior lagging by `phi`.
pub fn link_lengths(t: f64, params: &PlantParams) -> (f64, f64) {
    let w = 2.0 * PI * params.frequency * t;
    let half = 0.5 * params.amplitude;
    (
        params.rest_length + half * (1.0 - w.cos()),
        params.rest_length + half * (1.0 - (w - params.phi).cos()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticDrive(pub PlantParams);

impl LinkDrive for AnalyticDrive {
    fn lengths(&self, t: f64) -> (f64, f64) {
        link_lengths(t, &self.0)
    }
}

/// Fixed link lengths, mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDrive(pub f64, pub f64);

impl LinkDrive for ConstantDrive {
    fn lengths(&self, _t: f64) -> (f64, f64) {
        (self.0, self.1)
    }
}

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// Forward and backward friction coefficients at link length `l` (mm),
/// interpolated linearly between the rest and fully elongated endpoints.
pub fn friction_coeffs(l: f64, params: &PlantParams) -> (f64, f64) {
    let lo = params.rest_length;
    let hi = params.rest_length + params.amplitude;
    let clamped = l.clamp(lo, hi);
    if clamped != l && (l - clamped).abs() > 1e-9 * hi && !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("link length {l:.3} mm outside [{lo}, {hi}] mm; friction coefficients clamped");
    }
    let s = (clamped - lo) / params.amplitude;
    (params.mu_f1 + s * (params.mu_f2 - params.mu_f1), params.mu_b1 + s * (params.mu_b2 - params.mu_b1))
}

/// Smoothed Coulomb friction on one node, N.
pub fn friction_force(mass: f64, mu_f: f64, mu_b: f64, v: f64, params: &PlantParams) -> f64 {
    let mu = if v > 0.0 { mu_f } else { mu_b };
    -mu * mass * params.g * (params.sigma * v).tanh()
}

/// Spring forces `(F_PM, F_MA)` for positions `x` and link lengths in mm.
pub fn interaction_forces(x: &[f64; 3], l_a: f64, l_p: f64, params: &PlantParams) -> (f64, f64) {
    (params.k * (x[1] - x[0] - l_p * MM), params.k * (x[2] - x[1] - l_a * MM))
}

/// Friction forces on (P, M, A).
pub fn friction_forces(v: &[f64; 3], l_a: f64, l_p: f64, params: &PlantParams) -> [f64; 3] {
    let lengths = [l_p, 0.5 * (l_a + l_p), l_a];
    std::array::from_fn(|i| {
        let (mu_f, mu_b) = friction_coeffs(lengths[i], params);
        friction_force(params.masses[i], mu_f, mu_b, v[i], params)
    })
}

/// Time derivatives `(dx/dt, dv/dt)` at `state`. `tension` is an external
/// force opposing the posterior node.
pub fn rhs(state: &PlantState, params: &PlantParams, drive: &impl LinkDrive, tension: f64) -> ([f64; 3], [f64; 3]) {
    let (l_a, l_p) = drive.lengths(state.t);
    let (f_pm, f_ma) = interaction_forces(&state.x, l_a, l_p, params);
    let fr = friction_forces(&state.v, l_a, l_p, params);
    let [m_p, m_m, m_a] = params.masses;
    (
        state.v,
        [(fr[0] + f_pm - tension) / m_p, (fr[1] - f_pm + f_ma) / m_m, (fr[2] - f_ma) / m_a],
    )
}

/// Kinetic plus spring energy, J.
pub fn mechanical_energy(state: &PlantState, params: &PlantParams, l_a: f64, l_p: f64) -> f64 {
    let kinetic: f64 = (0..3).map(|i| 0.5 * params.masses[i] * state.v[i] * state.v[i]).sum();
    let (f_pm, f_ma) = interaction_forces(&state.x, l_a, l_p, params);
    kinetic + (f_pm * f_pm + f_ma * f_ma) / (2.0 * params.k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub state: PlantState,
    /// mm.
    pub l_a: f64,
    /// mm.
    pub l_p: f64,
    /// Friction on (P, M, A), N.
    pub friction: [f64; 3],
    /// Tether tension, N.
    pub tension: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frequency: f64,
    pub samples: Vec<TrajectorySample>,
    pub meta: SolverMeta,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.state.t)
    }

    /// Mean node position at `t`, linearly interpolated between samples.
    pub fn mean_position_at(&self, t: f64) -> f64 {
        let idx = self.samples.partition_point(|s| s.state.t < t);
        if idx == 0 {
            return self.samples[0].state.mean_position();
        }
        if idx >= self.samples.len() {
            return self.samples[self.samples.len() - 1].state.mean_position();
        }
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let w = (t - a.state.t) / (b.state.t - a.state.t);
        a.state.mean_position() * (1.0 - w) + b.state.mean_position() * w
    }

    pub fn tensions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tension).collect()
    }

    /// Writes the trajectory as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x_P,x_M,x_A,v_P,v_M,v_A,L_A,L_P,F_fric_P,F_fric_M,F_fric_A,tension")?;
        for s in &self.samples {
            let [xp, xm, xa] = s.state.x;
            let [vp, vm, va] = s.state.v;
            let [fp, fm, fa] = s.friction;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.state.t, xp, xm, xa, vp, vm, va, s.l_a, s.l_p, fp, fm, fa, s.tension
            )?;
        }
        Ok(())
    }
}

/// Options for [`simulate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub tol: Tolerances,
    /// Tether stiffness, N/m; zero disables the tether.
    pub tether_k: f64,
    pub initial: Option<PlantState>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), tether_k: 0.0, initial: None }
    }
}

/// Tension of a slack-free, tension-only tether anchored at the posterior
/// node's starting position.
pub fn tether_tension(tether_k: f64, x_p0: f64, x_p: f64) -> f64 {
    tether_k * (x_p - x_p0).max(0.0)
}

/// Integrates the body for `duration` seconds with the adaptive solver.
pub fn simulate(
    params: &PlantParams,
    drive: &impl LinkDrive,
    duration: f64,
    tol: Tolerances,
) -> Result<Trajectory, PlantError> {
    simulate_with(params, drive, duration, SimOptions { tol, ..SimOptions::default() })
}

pub fn simulate_with(
    params: &PlantParams,
    drive: &impl LinkDrive,
    duration: f64,
    opts: SimOptions,
) -> Result<Trajectory, PlantError> {
    params.validate()?;
    if !(duration > 0.0) {
        return Err(PlantError::InvalidParams("duration must be positive"));
    }
    let start = opts.initial.unwrap_or_else(|| PlantState::at_rest(params));
    let origin = start.x;
    // Integrate displacements from the start so step control does not
    // depend on where the body sits on the line.
    let unpack = |t: f64, y: &[f64; 6]| PlantState {
        x: std::array::from_fn(|i| origin[i] + y[i]),
        v: [y[3], y[4], y[5]],
        t,
    };
    let f = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        let tension = tether_tension(opts.tether_k, 0.0, y[0]);
        let (dx, dv) = rhs(&unpack(t, y), params, drive, tension);
        [dx[0], dx[1], dx[2], dv[0], dv[1], dv[2]]
    };

    let intervals = ((duration * params.frequency * SAMPLES_PER_PERIOD as f64).ceil() as usize).max(1);
    let out_times: Vec<f64> = (0..=intervals).map(|i| duration * i as f64 / intervals as f64).collect();
    let mut samples = Vec::with_capacity(out_times.len());
    let sample = |t: f64, y: &[f64; 6]| {
        let state = unpack(t, y);
        let (l_a, l_p) = drive.lengths(t);
        TrajectorySample {
            state,
            l_a,
            l_p,
            friction: friction_forces(&state.v, l_a, l_p, params),
            tension: tether_tension(opts.tether_k, 0.0, y[0]),
        }
    };
    let y0 = [0.0, 0.0, 0.0, start.v[0], start.v[1], start.v[2]];
    samples.push(sample(0.0, &y0));
    let mut next = 1;

    let solver = DormandPrince::new(opts.tol).max_step(params.period() / 20.0);
    let (y_end, stats): ([f64; 6], StepStats) = solver.integrate(f, 0.0, y0, duration, |step| {
        while next < out_times.len() && out_times[next] <= step.t1() {
            let t = out_times[next];
            let y = if t == step.t1() { step.eval(step.t1()) } else { step.eval(t) };
            samples.push(sample(t, &y));
            next += 1;
        }
    })?;
    if next < out_times.len() {
        samples.push(sample(duration, &y_end));
    }

    Ok(Trajectory {
        frequency: params.frequency,
        samples,
        meta: SolverMeta {
            rel_tol: opts.tol.rel,
            abs_tol: opts.tol.abs,
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            evaluations: stats.evaluations,
        },
    })
}

/// Runs with a tether of stiffness `tether_k` and returns the trajectory and
/// its tension history.
pub fn tether_force(
    params: &PlantParams,
    drive: &impl LinkDrive,
    duration: f64,
    tether_k: f64,
) -> Result<(Trajectory, Vec<f64>), PlantError> {
    let traj = simulate_with(params, drive, duration, SimOptions { tether_k, ..SimOptions::default() })?;
    let tension = traj.tensions();
    Ok((traj, tension))
}

/// Mean body velocity over the last five actuation periods, m/s.
pub fn steady_speed(traj: &Trajectory) -> Result<f64, PlantError> {
    let period = 1.0 / traj.frequency;
    let end = traj.duration();
    let cycles = end / period;
    if cycles + 1e-9 < MIN_CYCLES {
        return Err(PlantError::TooShort { cycles });
    }
    let window = AVERAGED_CYCLES * period;
    Ok((traj.mean_position_at(end) - traj.mean_position_at(end - window)) / window)
}

/// Same run integrated with the fixed-step classical Runge-Kutta scheme,
/// sampled every `dt`. Used to cross-check the adaptive solver.
pub fn simulate_fixed_step(
    params: &PlantParams,
    drive: &impl LinkDrive,
    duration: f64,
    dt: f64,
    tether_k: f64,
) -> Result<Vec<PlantState>, PlantError> {
    params.validate()?;
    let start = PlantState::at_rest(params);
    let y0 = [start.x[0], start.x[1], start.x[2], 0.0, 0.0, 0.0];
    let x_p0 = start.x[0];
    let mut out = Vec::new();
    integrator::rk4_fixed(
        |t, y: &[f64; 6]| {
            let s = PlantState { x: [y[0], y[1], y[2]], v: [y[3], y[4], y[5]], t };
            let (dx, dv) = rhs(&s, params, drive, tether_tension(tether_k, x_p0, y[0]));
            [dx[0], dx[1], dx[2], dv[0], dv[1], dv[2]]
        },
        0.0,
        y0,
        duration,
        dt,
        |t, y| out.push(PlantState { x: [y[0], y[1], y[2]], v: [y[3], y[4], y[5]], t }),
    );
    Ok(out)
}

/// Steady speed from a fixed-step state history sampled every `dt`.
pub fn steady_speed_of_states(states: &[PlantState], frequency: f64) -> Result<f64, PlantError> {
    let end = states.last().map_or(0.0, |s| s.t);
    let cycles = end * frequency;
    if cycles + 1e-9 < MIN_CYCLES {
        return Err(PlantError::TooShort { cycles });
    }
    let window = AVERAGED_CYCLES / frequency;
    let idx = states.partition_point(|s| s.t < end - window - 1e-12);
    Ok((states[states.len() - 1].mean_position() - states[idx].mean_position()) / (end - states[idx].t))
}
