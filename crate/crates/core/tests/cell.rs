use roughslip::cell::{
    decay_check, solve_cell_problem, solve_cell_problem_with_viscosity, CellSolution,
};
use roughslip::geometry::UnitCell;
use roughslip::Error;

/// Slip constant of the cosine cell `(1 + cos 2 pi y) / 2`, extrapolated
/// from `n = 32` and `n = 64` solves at truncation heights 8 and 16. The
/// wall polyline makes the error second order in `1/n`; the extrapolated
/// value is good to about 5e-5.
const COSINE_CHIBAR: f64 = -0.929048;

const COSINE: UnitCell = UnitCell::Cosine { amplitude: 1.0 };

fn slice_oscillation(s: &CellSolution, y: f64) -> f64 {
    let mean = s.slice_mean(y).unwrap()[0];
    (0..128)
        .map(|i| (s.field.velocity([(i as f64 + 0.5) / 128.0, y]).unwrap()[0] - mean).abs())
        .fold(0.0, f64::max)
}

#[test]
fn flat_cell_has_no_corrector() {
    let s = solve_cell_problem(&UnitCell::Flat, 4.0, 16).unwrap();
    assert_eq!(s.crest(), 0.0);
    assert!(s.chibar.abs() < 1e-14);
    assert!(s.field.velocity([0.3, 2.0]).unwrap()[0].abs() < 1e-14);
    let report = decay_check(&s).unwrap();
    assert!(report.no_decay_needed);
}

#[test]
fn constant_cell_attains_the_upper_bound() {
    let cell = UnitCell::Constant { value: 0.6 };
    let s = solve_cell_problem(&cell, 4.0, 16).unwrap();
    assert!((s.chibar + 0.6).abs() < 1e-12, "chibar = {}", s.chibar);
    let v = s.field.velocity([0.71, 2.2]).unwrap();
    assert!((v[0] + 0.6).abs() < 1e-12 && v[1].abs() < 1e-12);
    assert!(s.slip_length().abs() < 1e-12);
}

#[test]
fn cosine_cell_matches_reference_and_bounds() {
    let s = solve_cell_problem(&COSINE, 8.0, 32).unwrap();
    assert!(s.chibar <= 0.0 && -s.chibar <= 1.0 + 1e-6);
    // n = 32 sits about 1.3e-3 above the extrapolated limit.
    assert!(
        (s.chibar - COSINE_CHIBAR).abs() < 2e-3,
        "chibar = {}",
        s.chibar
    );
    assert!(s.top_vertical_mean.abs() < 1e-6);
}

#[test]
fn sawtooth_cell_respects_bounds() {
    for amplitude in [0.1, 0.75] {
        let cell = UnitCell::Sawtooth { amplitude };
        let s = solve_cell_problem(&cell, amplitude + 6.0, 16).unwrap();
        assert!(s.chibar <= 0.0, "chibar = {}", s.chibar);
        assert!(-s.chibar <= amplitude + 1e-6, "chibar = {}", s.chibar);
    }
}

#[test]
fn truncation_and_slice_independence() {
    let low = solve_cell_problem(&COSINE, 8.0, 32).unwrap();
    let high = solve_cell_problem(&COSINE, 16.0, 32).unwrap();
    assert!((low.chibar - high.chibar).abs() <= 1e-6);
    for y in [2.0, 3.0, 8.0] {
        let m = low.slice_mean(y).unwrap();
        assert!((m[0] - low.chibar).abs() <= 1e-5, "slice {y}: {}", m[0]);
    }
}

#[test]
fn oscillation_decays_exponentially() {
    let s = solve_cell_problem(&COSINE, 8.0, 32).unwrap();
    let report = decay_check(&s).unwrap();
    assert!(!report.no_decay_needed);
    assert!(report.rate >= 5.0, "rate = {}", report.rate);
    assert!(s.decay_samples.windows(2).all(|w| w[1].1 < w[0].1));
    let crest = slice_oscillation(&s, 1.0);
    let top = slice_oscillation(&s, 8.0);
    assert!(top <= 1e-8 * crest, "top {top:e} crest {crest:e}");
}

#[test]
fn corrector_is_viscosity_independent() {
    let a = solve_cell_problem(&COSINE, 4.0, 16).unwrap();
    let b = solve_cell_problem_with_viscosity(&COSINE, 4.0, 16, 10.0).unwrap();
    assert!((a.chibar - b.chibar).abs() <= 1e-10);
}

#[test]
fn rejects_low_truncation() {
    let err = solve_cell_problem(&COSINE, 1.5, 16).unwrap_err();
    assert!(matches!(err, Error::TruncationTooLow { .. }));
}

#[test]
fn decay_fit_needs_four_samples() {
    let mut s = solve_cell_problem(&COSINE, 4.0, 16).unwrap();
    s.decay_samples.truncate(3);
    assert_eq!(
        decay_check(&s).unwrap_err(),
        Error::InsufficientSamples { needed: 4, got: 3 }
    );
}
