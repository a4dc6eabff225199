use crawler_core::oscillator::{cpg_frequency, CpgParams};
use crawler_core::plant::pneumatic::PneumaticParams;
use crawler_core::plant::PlantParams;
use crawler_service::calibration::{calibration_table, read_table, write_table};
use crawler_service::experiments::{
    force_correlation, freq_sweep, mean_top_peaks, pearson, phase_sweep, write_csv, DEFAULT_TETHER_K, SWEEP_FREQUENCIES,
};
use crawler_service::{DriveMode, ServiceError};

#[test]
fn phase_sweep_orders_quarter_lags_first() {
    let rows = phase_sweep(&PlantParams::default(), &[0, 1, 2, 3], false).unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.speed_mm_s).collect();
    assert!(v[0].min(v[1]) > v[2].max(v[3]), "{v:?}");
    assert_eq!(rows[1].lag_s, 0.5);
}

#[test]
fn symmetric_friction_null() {
    let p = PlantParams::default().with_symmetric_friction();
    let v = phase_sweep(&p, &[0], false).unwrap()[0].speed_mm_s;
    // 1e-3 * L0 * f with L0 in mm.
    assert!(v.abs() < 1e-3 * p.rest_length * p.frequency, "{v}");
}

#[test]
fn phase_sweep_csv_has_header_and_rows() {
    let rows = phase_sweep(&PlantParams::default(), &[0, 1], false).unwrap();
    let mut out = Vec::new();
    write_csv(&mut out, &rows).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,lag_s,speed_mm_s,oracle_mm_s");
    assert_eq!(lines.len(), 3);
}

#[test]
fn force_and_speed_correlate() {
    let fc = force_correlation(&PlantParams::default(), &[0, 1, 2, 3], DEFAULT_TETHER_K).unwrap();
    assert!(fc.rows.iter().all(|r| r.peak_force_n > 0.0));
    assert!(fc.r.unwrap() > 0.0, "{:?}", fc);
}

#[test]
fn correlation_not_available_for_degenerate_inputs() {
    let single = force_correlation(&PlantParams::default(), &[1], DEFAULT_TETHER_K).unwrap();
    assert_eq!(single.r, None);
    let slick = force_correlation(&PlantParams::default().without_friction(), &[0, 1, 2, 3], DEFAULT_TETHER_K).unwrap();
    assert_eq!(slick.r, None, "{slick:?}");
}

#[test]
fn pearson_oracle() {
    assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    // Hand-evaluated: sxy = 2, sxx = 2, syy = 8/3.
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 3.0]).unwrap();
    assert!((r - 2.0 / (2.0f64 * 8.0 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    assert_eq!(pearson(&[1.0], &[1.0]), None);
}

#[test]
fn top_peaks_average() {
    let series = [0.0, 1.0, 0.0, 3.0, 0.0, 2.0, 0.0];
    assert_eq!(mean_top_peaks(&series, 2), 2.5);
    assert_eq!(mean_top_peaks(&series, 10), 2.0);
    assert_eq!(mean_top_peaks(&[0.0; 5], 3), 0.0);
}

#[test]
fn valve_sweep_peaks_inside_the_band() {
    let sweep =
        freq_sweep(&PlantParams::default(), &PneumaticParams::default(), DriveMode::Valve, 1, &SWEEP_FREQUENCIES).unwrap();
    assert_eq!(sweep.interior_maximum, Some(true), "{:?}", sweep.rows);
    let again =
        freq_sweep(&PlantParams::default(), &PneumaticParams::default(), DriveMode::Valve, 1, &SWEEP_FREQUENCIES).unwrap();
    let bits = |s: &[f64]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let (a, b): (Vec<f64>, Vec<f64>) =
        (sweep.rows.iter().map(|r| r.speed_mm_s).collect(), again.rows.iter().map(|r| r.speed_mm_s).collect());
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn analytic_sweep_has_no_trade_off_verdict() {
    let sweep =
        freq_sweep(&PlantParams::default(), &PneumaticParams::default(), DriveMode::Analytic, 1, &[0.5, 1.0]).unwrap();
    assert_eq!(sweep.interior_maximum, None);
    for r in &sweep.rows {
        assert!((r.stride_mm - r.speed_mm_s / r.f_hz).abs() < 1e-12);
    }
}

#[test]
fn calibration_table_round_trip() {
    let cpg = CpgParams::default();
    let rows = calibration_table(&SWEEP_FREQUENCIES, &cpg).unwrap();
    assert!(rows.windows(2).all(|w| w[0].m < w[1].m), "{rows:?}");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.csv");
    write_table(&path, &rows).unwrap();
    let back = read_table(&path).unwrap();
    assert_eq!(back, rows);
    for r in &back {
        let f = cpg_frequency(&cpg, r.m, r.f_hz).unwrap();
        assert!((f - r.f_hz).abs() / r.f_hz < 0.02, "{} Hz measured {f}", r.f_hz);
    }
}

#[test]
fn calibration_rejects_out_of_range() {
    let err = calibration_table(&[0.5, 2.0], &CpgParams::default()).unwrap_err();
    assert!(matches!(err, ServiceError::Oscillator(_)), "{err}");
}
