mod common;

use common::*;
use gridmodal::dynamics::{assemble, DynamicSystem};
use gridmodal::small_signal::{
    damping_ratio, eigen_analysis, linearize, spectrum, ModalError, ModeCategory, StateMatrix, DEFAULT_H_REL,
    RESIDUAL_LIMIT,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(name: &str, pss: bool) -> DynamicSystem {
    let case = bundled(name);
    let case = if pss { case } else { case.without_pss() };
    assemble(&case, &solved(&case)).unwrap()
}

/// `det(z·I − A)` through a complex LU factorization.
fn char_poly(a: &DMatrix<f64>, z: Complex64) -> Complex64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { z } else { Complex64::new(0.0, 0.0) };
        d - a[(i, j)]
    });
    m.lu().determinant()
}

/// Durand–Kerner iteration on the characteristic polynomial.
fn polynomial_roots(a: &DMatrix<f64>) -> Vec<Complex64> {
    let n = a.nrows();
    let radius = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            let step = char_poly(a, z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 * radius {
            break;
        }
    }
    z
}

#[test]
fn random_spectrum_matches_polynomial_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let a = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let ours = spectrum(&a).unwrap();
        let roots = polynomial_roots(&a);
        for r in &roots {
            assert!(char_poly(&a, *r).norm() < 1e-6 * char_poly(&a, *r + 0.1).norm());
        }
        let d = spectrum_distance(&ours.values, &roots);
        assert!(d < 1e-6, "{d:e}");
        assert!(ours.max_residual < RESIDUAL_LIMIT);
    }
}

#[test]
fn similarity_preserves_known_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut d = DMatrix::zeros(20, 20);
    let mut known = Vec::new();
    for k in 0..10 {
        let (re, im) = (-0.05 * (k + 1) as f64, 2.0 + k as f64);
        d[(2 * k, 2 * k)] = re;
        d[(2 * k + 1, 2 * k + 1)] = re;
        d[(2 * k, 2 * k + 1)] = im;
        d[(2 * k + 1, 2 * k)] = -im;
        known.push(Complex64::new(re, im));
        known.push(Complex64::new(re, -im));
    }
    let t = DMatrix::identity(20, 20) + DMatrix::from_fn(20, 20, |_, _| rng.random_range(-0.1..0.1));
    let a = &t * d * t.clone().try_inverse().unwrap();
    let r = eigen_analysis(&StateMatrix::from_matrix(a)).unwrap();
    let dist = spectrum_distance(&r.spectrum.values, &known);
    assert!(dist < 1e-9, "{dist:e}");
    assert_eq!(r.modes.len(), 10);
    assert!(r.stable);
    assert!((r.least_damped_mode().unwrap().lambda - Complex64::new(-0.05, 2.0)).norm() < 1e-9);
}

#[test]
fn participation_columns_are_normalized() {
    for name in ["smib", "krps35"] {
        let r = eigen_analysis(&linearize(&system(name, true), DEFAULT_H_REL).unwrap()).unwrap();
        for col in r.participation.column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
            assert!(col.iter().all(|&p| p >= 0.0));
        }
    }
    let r = eigen_analysis(&StateMatrix::from_matrix(DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0, -3.0])))
        .unwrap();
    for i in 0..3 {
        let k = r.spectrum.values.iter().position(|v| (v.re + (i + 1) as f64).abs() < 1e-12).unwrap();
        assert!((r.participation[(i, k)] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn halving_the_perturbation_barely_moves_the_state_matrix() {
    for name in ["smib", "three_machine", "krps35"] {
        let sys = system(name, true);
        let a1 = linearize(&sys, DEFAULT_H_REL).unwrap().a;
        let a2 = linearize(&sys, DEFAULT_H_REL / 2.0).unwrap().a;
        let scale = a1.amax();
        for (x, y) in a1.iter().zip(a2.iter()) {
            let dev = (x - y).abs();
            assert!(dev < 1e-4 * x.abs().max(1e-6 * scale), "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn input_matrix_matches_step_direction() {
    let sys = system("smib", true);
    let sm = linearize(&sys, DEFAULT_H_REL).unwrap();
    assert_eq!(sm.b.shape(), (sys.n_states(), sys.n_inputs()));
    assert_eq!(sm.input_labels, sys.input_labels());
    let k = sys.input_position("G1", "p_ref").unwrap();
    let col = sm.b.column(k);
    assert!(col.amax() > 0.0);
    let delta = state(&sys, "G1", "delta");
    assert_eq!(col[delta], 0.0);
}

#[test]
fn bundled_spectra_are_accurate_and_conjugate_closed() {
    for name in ["smib", "three_machine", "krps35"] {
        for pss in [false, true] {
            let r = eigen_analysis(&linearize(&system(name, pss), DEFAULT_H_REL).unwrap()).unwrap();
            assert!(r.spectrum.max_residual < RESIDUAL_LIMIT, "{name}");
            let conj: Vec<Complex64> = r.spectrum.values.iter().map(|v| v.conj()).collect();
            assert!(spectrum_distance(&r.spectrum.values, &conj) < 1e-10, "{name}");
            assert!(r.stable, "{name} pss={pss}");
        }
    }
}

#[test]
fn rescaling_speed_leaves_spectrum_unchanged() {
    let sys = system("three_machine", true);
    let sm = linearize(&sys, DEFAULT_H_REL).unwrap();
    let mut scaled = sm.a.clone();
    let s = sys.base().omega_s();
    for unit in sys.unit_names() {
        let k = state(&sys, unit, "omega");
        scaled.row_mut(k).scale_mut(1.0 / s);
        scaled.column_mut(k).scale_mut(s);
    }
    let a = spectrum(&sm.a).unwrap();
    let b = spectrum(&scaled).unwrap();
    assert!(spectrum_distance(&a.values, &b.values) < 1e-9);
}

#[test]
fn smib_swing_mode_is_rotor_dominated() {
    let sys = system("smib", false);
    let r = eigen_analysis(&linearize(&sys, DEFAULT_H_REL).unwrap()).unwrap();
    let m = r.least_damped_in_band(0.3, 3.0).unwrap();
    assert_eq!(r.modes.iter().filter(|m| m.is_oscillatory() && (0.3..3.0).contains(&m.freq_hz)).count(), 1);
    let mut top: Vec<&str> = m.dominant_states[..2].iter().map(|(s, _)| s.as_str()).collect();
    top.sort();
    assert_eq!(top, ["G1.delta", "G1.omega"]);
    assert_eq!(m.category, ModeCategory::LocalPlant);
}

#[test]
fn pss_raises_electromechanical_damping() {
    for name in ["smib", "three_machine", "krps35"] {
        let zeta = |pss| {
            let r = eigen_analysis(&linearize(&system(name, pss), DEFAULT_H_REL).unwrap()).unwrap();
            r.least_damped_in_band(0.3, 3.0).unwrap().damping_ratio
        };
        let (off, on) = (zeta(false), zeta(true));
        assert!(on > off, "{name}: {off} -> {on}");
    }
}

#[test]
fn damping_ratio_definition() {
    let z = damping_ratio(Complex64::new(-3.0, 4.0)).unwrap();
    assert!((z - 0.6).abs() < 1e-15);
    assert_eq!(damping_ratio(Complex64::new(-2.0, 0.0)).unwrap(), 1.0);
    assert_eq!(damping_ratio(Complex64::new(2.0, 0.0)).unwrap(), -1.0);
    assert_eq!(damping_ratio(Complex64::new(0.0, 0.0)), Err(ModalError::ZeroEigenvalue));
}

#[test]
fn defective_matrix_is_reported() {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
    assert!(matches!(eigen_analysis(&StateMatrix::from_matrix(a)), Err(ModalError::DefectiveMode(_))));
}
