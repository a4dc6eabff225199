use crawler_core::plant::integrator::Tolerances;
use crawler_core::plant::{
    friction_coeffs, friction_force, interaction_forces, link_lengths, mechanical_energy, simulate, simulate_fixed_step,
    simulate_with, steady_speed, steady_speed_of_states, AnalyticDrive, ConstantDrive, PlantError, PlantParams,
    PlantState, SimOptions,
};
use proptest::prelude::*;

fn fig() -> PlantParams {
    PlantParams::default()
}

fn speed(p: &PlantParams, tol: Tolerances) -> f64 {
    steady_speed(&simulate(p, &AnalyticDrive(*p), 20.0, tol).unwrap()).unwrap()
}

#[test]
fn friction_force_hand_evaluated() {
    // 0.15 * 0.06 kg * 9.81 m/s², fully saturated.
    let f = friction_force(0.06, 0.15, 0.5, 1.0, &fig());
    assert!((f + 0.0883).abs() < 1e-4, "{f}");
    let b = friction_force(0.06, 0.15, 0.5, -1.0, &fig());
    assert!((b - 0.2943).abs() < 1e-4, "{b}");
    assert_eq!(friction_force(0.06, 0.15, 0.5, 0.0, &fig()), 0.0);
}

#[test]
fn spring_force_hand_evaluated() {
    // 10 mm of stretch at 100 N/m.
    let (f_pm, f_ma) = interaction_forces(&[0.0, 0.11, 0.21], 100.0, 100.0, &fig());
    assert!((f_pm - 1.0).abs() < 1e-12 && f_ma.abs() < 1e-12, "{f_pm} {f_ma}");
}

#[test]
fn link_length_examples() {
    let p = fig();
    let (a, l) = link_lengths(1.0, &p);
    assert!((a - 130.0).abs() < 1e-12 && (l - 130.0).abs() < 1e-12);
    let (_, l) = link_lengths(0.0, &p.with_phase_index(1));
    assert!((l - 115.0).abs() < 1e-9, "{l}");
}

#[test]
fn friction_endpoints() {
    let p = fig();
    assert_eq!(friction_coeffs(100.0, &p), (0.15, 0.5));
    let (f, b) = friction_coeffs(130.0, &p);
    assert!((f - 0.2).abs() < 1e-12 && (b - 0.2).abs() < 1e-12);
}

#[test]
fn energy_conserved_without_friction() {
    let p = fig().without_friction();
    let drive = ConstantDrive(110.0, 95.0);
    let traj = simulate(&p, &drive, 10.0, Tolerances { rel: 1e-9, abs: 1e-12 }).unwrap();
    let e0 = mechanical_energy(&traj.samples[0].state, &p, 110.0, 95.0);
    assert!(e0 > 0.0);
    for s in &traj.samples {
        let e = mechanical_energy(&s.state, &p, 110.0, 95.0);
        assert!((e - e0).abs() / e0 < 1e-6, "t={} {e} vs {e0}", s.state.t);
    }
}

#[test]
fn momentum_conserved_without_friction() {
    let p = fig().without_friction();
    let traj = simulate(&p, &AnalyticDrive(p), 10.0, Tolerances::default()).unwrap();
    for s in &traj.samples {
        let momentum: f64 = (0..3).map(|i| p.masses[i] * s.state.v[i]).sum();
        assert!(momentum.abs() < 1e-9, "{momentum}");
    }
}

#[test]
fn translation_invariance() {
    let p = fig().with_phase_index(1);
    let base = simulate(&p, &AnalyticDrive(p), 20.0, Tolerances::default()).unwrap();
    let shifted = simulate_with(
        &p,
        &AnalyticDrive(p),
        20.0,
        SimOptions { initial: Some(PlantState::at_rest(&p).translated(0.75)), ..SimOptions::default() },
    )
    .unwrap();
    // Rounding of the offset perturbs step selection, so agreement is only
    // at the solver's tolerance.
    let mut worst: f64 = 0.0;
    for (a, b) in base.samples.iter().zip(&shifted.samples) {
        for i in 0..3 {
            worst = worst.max((b.state.x[i] - a.state.x[i] - 0.75).abs());
        }
    }
    assert!(worst < 1e-6, "{worst}");
    let (va, vb) = (steady_speed(&base).unwrap(), steady_speed(&shifted).unwrap());
    assert!((va - vb).abs() < 1e-3 * va.abs(), "{va} vs {vb}");
}

#[test]
fn swapped_friction_reverses_motion() {
    let p = fig();
    let v = speed(&p, Tolerances::default());
    let w = speed(&p.with_swapped_friction(), Tolerances::default());
    assert!(v > 0.0);
    assert!((v + w).abs() < 0.01 * v.abs(), "{v} vs {w}");
}

#[test]
fn symmetric_friction_goes_nowhere() {
    let p = fig().with_symmetric_friction();
    let v = speed(&p, Tolerances::default());
    // 1e-3 * L0 * f, in m/s.
    assert!(v.abs() < 1e-3 * 0.1 * p.frequency, "{v}");
}

#[test]
fn tighter_tolerance_changes_speed_under_one_percent() {
    for n in 0..4 {
        let p = fig().with_phase_index(n);
        let t = Tolerances::default();
        let (a, b) = (speed(&p, t), speed(&p, Tolerances { rel: t.rel / 10.0, abs: t.abs / 10.0 }));
        assert!((a - b).abs() < 0.01 * a.abs(), "n={n}: {a} vs {b}");
    }
}

#[test]
fn adaptive_matches_fixed_step_oracle() {
    let p = fig().with_phase_index(1);
    let traj = simulate(&p, &AnalyticDrive(p), 20.0, Tolerances::default()).unwrap();
    let dt = 1e-4;
    let states = simulate_fixed_step(&p, &AnalyticDrive(p), 20.0, dt, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for s in &traj.samples {
        let k = (s.state.t / dt).round() as usize;
        let o = &states[k];
        assert!((o.t - s.state.t).abs() < 1e-9);
        for i in 0..3 {
            worst = worst.max((o.x[i] - s.state.x[i]).abs());
        }
    }
    assert!(worst < 1e-4, "max error {worst} m");
    let (a, b) = (steady_speed(&traj).unwrap(), steady_speed_of_states(&states, p.frequency).unwrap());
    assert!((a - b).abs() < 0.01 * a.abs(), "{a} vs {b}");
}

#[test]
fn phase_ordering() {
    let v: Vec<f64> = (0..4).map(|n| speed(&fig().with_phase_index(n), Tolerances::default())).collect();
    assert!(v[0].min(v[1]) > v[2].max(v[3]), "{v:?}");
}

#[test]
fn short_runs_rejected() {
    let p = fig();
    let traj = simulate(&p, &AnalyticDrive(p), 10.0, Tolerances::default()).unwrap();
    assert!(matches!(steady_speed(&traj), Err(PlantError::TooShort { .. })));
}

#[test]
fn invalid_params_rejected() {
    let p = PlantParams { k: 0.0, ..fig() };
    assert!(simulate(&p, &AnalyticDrive(p), 1.0, Tolerances::default()).is_err());
    let p = PlantParams { mu_b1: -0.1, ..fig() };
    assert!(p.validate().is_err());
}

proptest! {
    #[test]
    fn coefficients_stay_between_endpoints(l in -1e3f64..1e3) {
        let p = fig();
        let (f, b) = friction_coeffs(l, &p);
        prop_assert!((0.15..=0.2).contains(&f));
        prop_assert!((0.2..=0.5).contains(&b));
    }

    #[test]
    fn friction_opposes_motion(v in -1.0f64..1.0, mu_f in 0.0f64..1.0, mu_b in 0.0f64..1.0) {
        let f = friction_force(0.06, mu_f, mu_b, v, &fig());
        prop_assert!(f * v <= 0.0);
        prop_assert!(f.abs() <= mu_f.max(mu_b) * 0.06 * 9.81 + 1e-15);
    }

    #[test]
    fn lengths_stay_in_range(t in 0.0f64..100.0, n in 0u8..4) {
        let p = fig().with_phase_index(n);
        let (a, l) = link_lengths(t, &p);
        prop_assert!((100.0 - 1e-9..=130.0 + 1e-9).contains(&a));
        prop_assert!((100.0 - 1e-9..=130.0 + 1e-9).contains(&l));
    }
}
