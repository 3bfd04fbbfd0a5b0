//! Logarithmic-derivative criterion on data that looks measured.

mod common;

use std::f64::consts::PI;

use impstab::criteria::Verdict;
use impstab::error::Error;
use impstab::frames::DomainKind;
use impstab::logderiv::{self, FreqResponse, LoopChannel};
use impstab::C64;

/// The unstable clutter pattern sampled on a slightly jittered grid.
fn jittered() -> FreqResponse {
    let f = common::clutter_unstable();
    let step = 2.0 * PI * 0.01;
    let omega: Vec<f64> = (0..8000).map(|k| 20.0 + k as f64 * step + 0.2 * step * ((k * 7919) % 13) as f64 / 13.0).collect();
    let values = omega.iter().map(|&w| f.eval(C64::new(0.0, w)).unwrap()).collect();
    FreqResponse::new("S_Z", omega, values).unwrap()
}

#[test]
fn non_uniform_grid_is_refused() {
    let r = jittered();
    let e = logderiv::log_derivative(&r, 2.0 * PI * 0.01).unwrap_err();
    assert!(matches!(e, Error::NonUniformGrid(_)), "{e}");
}

#[test]
fn resampled_measurement_keeps_the_mode() {
    let step = 2.0 * PI * 0.01;
    let r = jittered().resample(step).unwrap();
    let ch = LoopChannel { domain: DomainKind::Dq, response: r, physical: true };
    let (report, _, _) = logderiv::stability_from_loops(&[ch], step).unwrap();
    assert_eq!(report.verdict, Verdict::Unstable);
    let m = report.modes.iter().find(|m| m.unstable).unwrap();
    assert!((m.alpha_z - 0.18).abs() < 0.02 * 0.18, "{}", m.alpha_z);
    assert!((m.omega_z - 62.0).abs() < 2.0 * step);
}

#[test]
fn artifacts_are_masked() {
    let (r, step) = common::single_factor(-0.5, 100.0, C64::new(1.0, 0.0), 20.0);
    let t = logderiv::log_derivative_masked(&r, step, &[110.0]).unwrap();
    let half = 2.0 * PI * logderiv::MASK_HALF_WIDTH_HZ;
    for (w, m) in t.omega.iter().zip(&t.mask) {
        assert_eq!(m.is_some(), (w - 110.0).abs() <= half, "at {w}");
    }
    let modes = logderiv::find_modes(&t);
    assert!(modes.iter().any(|m| (m.omega_z - 100.0).abs() < step && !m.unstable));
}
