use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{classify_mode, damping_ratio, ModalError, ModeCategory, StateMatrix, RESIDUAL_LIMIT, STRUCTURAL_ZERO};

/// Imaginary parts below this (relative to `max(1, |λ|)`) mark a real eigenvalue.
const REAL_TOLERANCE: f64 = 1e-10;

/// Eigenvalue condition number `‖v‖·‖w‖` above which a mode is treated as
/// defective.
const CONDITION_LIMIT: f64 = 1e8;

/// Number of states kept in `Mode::dominant_states`.
const DOMINANT_STATES: usize = 4;

/// Full spectrum with right (`v`) and left (`w = v⁻¹`, rows) eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub right: DMatrix<Complex64>,
    pub left: DMatrix<Complex64>,
    /// Largest `‖A·v − λ·v‖ / ‖A‖` over all unit eigenvectors.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub lambda: Complex64,
    pub freq_hz: f64,
    pub damping_ratio: f64,
    pub category: ModeCategory,
    /// States with the largest participation, descending.
    pub dominant_states: Vec<(String, f64)>,
    /// Column of the mode in the participation matrix.
    pub index: usize,
}

impl Mode {
    pub fn is_oscillatory(&self) -> bool {
        self.lambda.im > 0.0
    }

    pub fn is_structural_zero(&self) -> bool {
        self.lambda.norm() < STRUCTURAL_ZERO
    }
}

#[derive(Debug, Clone)]
pub struct ModalResult {
    /// One entry per real eigenvalue and per conjugate pair (`Im > 0`),
    /// ordered by decreasing real part.
    pub modes: Vec<Mode>,
    /// `participation[(k, i)]`: share of state `k` in eigenvalue `i` of the
    /// raw spectrum. Columns sum to one.
    pub participation: DMatrix<f64>,
    pub spectrum: Spectrum,
    /// Every non-structural eigenvalue has `Re < 0`.
    pub stable: bool,
    /// Position in `modes` of the oscillatory mode with the smallest damping
    /// ratio (any mode if none oscillates).
    pub least_damped: Option<usize>,
}

impl ModalResult {
    pub fn least_damped_mode(&self) -> Option<&Mode> {
        self.least_damped.map(|k| &self.modes[k])
    }

    /// Least-damped oscillatory mode with frequency in `[lo, hi)` Hz.
    pub fn least_damped_in_band(&self, lo: f64, hi: f64) -> Option<&Mode> {
        self.modes
            .iter()
            .filter(|m| m.is_oscillatory() && m.freq_hz >= lo && m.freq_hz < hi)
            .min_by(|a, b| a.damping_ratio.total_cmp(&b.damping_ratio))
    }
}

/// Parlett–Reinsch balancing with power-of-two scale factors.
///
/// Returns `(B, d)` with `B = D⁻¹·A·D`, `D = diag(d)`. Scaling by powers of
/// two is exact, so the spectrum of `B` is that of `A` bit for bit in exact
/// arithmetic and the eigenvectors map back as `v = D·v_B`.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Balanced dense eigendecomposition with eigenpair residual checks.
pub fn spectrum(a: &DMatrix<f64>) -> Result<Spectrum, ModalError> {
    let n = a.nrows();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ModalError::NonFinite);
    }
    let (b, d) = balance(a);
    let fb = faer::Mat::<f64>::from_fn(n, n, |i, j| b[(i, j)]);
    let evd = fb.eigen().map_err(|_| ModalError::NoConvergence(0))?;
    let s = evd.S();
    let u = evd.U();
    let values: Vec<Complex64> = (0..n)
        .map(|k| {
            let z = s.column_vector()[k];
            let z = Complex64::new(z.re, z.im);
            // faer reports exact conjugate pairs; tiny imaginary parts from
            // real Schur blocks are snapped to zero
            if z.im.abs() <= REAL_TOLERANCE * z.norm().max(1.0) { Complex64::new(z.re, 0.0) } else { z }
        })
        .collect();
    let mut right = DMatrix::from_fn(n, n, |i, k| {
        let z = u[(i, k)];
        Complex64::new(z.re, z.im) * d[i]
    });
    for k in 0..n {
        let norm = right.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            right.column_mut(k).unscale_mut(norm);
        }
    }
    let na = frobenius(a).max(f64::MIN_POSITIVE);
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let av = &ac * &right;
    let mut max_residual: f64 = 0.0;
    for k in 0..n {
        let r = (0..n)
            .map(|i| (av[(i, k)] - values[k] * right[(i, k)]).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / na;
        if !(r < RESIDUAL_LIMIT) {
            return Err(ModalError::InaccurateEigenpair { index: k, residual: r });
        }
        max_residual = max_residual.max(r);
    }
    let left = right.clone().try_inverse().ok_or_else(|| ModalError::DefectiveMode(worst_column(&right)))?;
    Ok(Spectrum { values, right, left, max_residual })
}

/// Column most nearly parallel to another, used to blame a defective mode.
fn worst_column(v: &DMatrix<Complex64>) -> usize {
    let n = v.ncols();
    let mut worst = (0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let dot: Complex64 = v.column(i).iter().zip(v.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
            if dot.norm() > worst.1 {
                worst = (j, dot.norm());
            }
        }
    }
    worst.0
}

/// `p[(k, i)] = |v_ki·w_ik| / Σ_k |v_ki·w_ik|`.
pub fn participation_factors(
    right: &DMatrix<Complex64>,
    left: &DMatrix<Complex64>,
) -> Result<DMatrix<f64>, ModalError> {
    let n = right.nrows();
    let mut p = DMatrix::from_fn(n, n, |k, i| (right[(k, i)] * left[(i, k)]).norm());
    for i in 0..n {
        let s: f64 = p.column(i).sum();
        if !(s.is_finite() && s > 0.0) {
            return Err(ModalError::DefectiveMode(i));
        }
        let v_norm = right.column(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let w_norm = left.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if v_norm * w_norm > CONDITION_LIMIT {
            return Err(ModalError::DefectiveMode(i));
        }
        p.column_mut(i).unscale_mut(s);
    }
    Ok(p)
}

/// Full modal analysis of a state matrix.
pub fn eigen_analysis(a: &StateMatrix) -> Result<ModalResult, ModalError> {
    let spec = spectrum(&a.a)?;
    let participation = participation_factors(&spec.right, &spec.left)?;
    let mut modes = Vec::new();
    for (i, &lambda) in spec.values.iter().enumerate() {
        if lambda.im < 0.0 {
            continue;
        }
        let structural = lambda.norm() < STRUCTURAL_ZERO;
        let freq_hz = lambda.im / (2.0 * std::f64::consts::PI);
        let damping = if structural { 0.0 } else { damping_ratio(lambda)? };
        let mut ranked: Vec<(usize, f64)> = participation.column(i).iter().copied().enumerate().collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let dominant_states = ranked
            .iter()
            .take(DOMINANT_STATES.min(ranked.len()))
            .map(|&(k, p)| (a.state_labels[k].clone(), p))
            .collect();
        modes.push(Mode {
            lambda,
            freq_hz,
            damping_ratio: damping,
            category: if lambda.im == 0.0 { ModeCategory::NonOscillatory } else { classify_mode(freq_hz) },
            dominant_states,
            index: i,
        });
    }
    modes.sort_by(|x, y| {
        y.lambda
            .re
            .total_cmp(&x.lambda.re)
            .then(y.lambda.im.total_cmp(&x.lambda.im))
            .then(x.index.cmp(&y.index))
    });
    let stable = modes.iter().all(|m| m.is_structural_zero() || m.lambda.re < 0.0);
    let pool: Vec<usize> = if modes.iter().any(|m| m.is_oscillatory()) {
        (0..modes.len()).filter(|&k| modes[k].is_oscillatory()).collect()
    } else {
        (0..modes.len()).filter(|&k| !modes[k].is_structural_zero()).collect()
    };
    let least_damped = pool
        .into_iter()
        .min_by(|&x, &y| modes[x].damping_ratio.total_cmp(&modes[y].damping_ratio).then(x.cmp(&y)));
    Ok(ModalResult { modes, participation, spectrum: spec, stable, least_damped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::RngExt;

    fn analyse(rows: &[&[f64]]) -> ModalResult {
        let n = rows.len();
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        eigen_analysis(&StateMatrix::from_matrix(a)).unwrap()
    }

    #[test]
    fn harmonic_oscillator() {
        let r = analyse(&[&[0.0, 1.0], &[-4.0, 0.0]]);
        assert_eq!(r.modes.len(), 1);
        let m = &r.modes[0];
        assert!((m.lambda - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert!(m.damping_ratio.abs() < 1e-12);
        assert!((m.freq_hz - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!(!r.stable);
    }

    #[test]
    fn diagonal_matrix() {
        let r = analyse(&[&[-1.0, 0.0, 0.0], &[0.0, -2.0, 0.0], &[0.0, 0.0, -3.0]]);
        let mut vals: Vec<f64> = r.spectrum.values.iter().map(|z| z.re).collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![-3.0, -2.0, -1.0]);
        for i in 0..3 {
            // the state carrying each eigenvalue participates fully
            let k = (0..3).find(|&k| r.participation[(k, i)] > 0.5).unwrap();
            assert!((r.participation[(k, i)] - 1.0).abs() < 1e-12);
            assert!((r.spectrum.values[i].re + (k as f64 + 1.0)).abs() < 1e-12);
        }
        assert!(r.stable);
        assert!(r.modes.iter().all(|m| m.category == ModeCategory::NonOscillatory));
    }

    #[test]
    fn block_diagonal_participation_does_not_cross_blocks() {
        let r = analyse(&[
            &[-0.5, 3.0, 0.0, 0.0],
            &[-3.0, -0.5, 0.0, 0.0],
            &[0.0, 0.0, -1.0, 10.0],
            &[0.0, 0.0, -10.0, -1.0],
        ]);
        for i in 0..4 {
            let first_block = r.spectrum.values[i].im.abs() < 5.0;
            let (inside, outside) = if first_block { (0..2, 2..4) } else { (2..4, 0..2) };
            let s_in: f64 = inside.map(|k| r.participation[(k, i)]).sum();
            let s_out: f64 = outside.map(|k| r.participation[(k, i)]).sum();
            assert!((s_in - 1.0).abs() < 1e-12);
            assert!(s_out < 1e-12);
        }
    }

    #[test]
    fn balancing_preserves_spectrum_of_badly_scaled_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 1e6, 0.0, 1e-6, -2.0, 1e4, 0.0, 1e-4, -3.0]);
        let (b, d) = balance(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b[(i, j)], a[(i, j)] * d[j] / d[i]);
            }
        }
        let s = spectrum(&a).unwrap();
        assert!(s.max_residual < 1e-12);
    }

    #[test]
    fn conjugates_come_in_pairs_and_left_vectors_invert_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = spectrum(&a).unwrap();
        for z in &s.values {
            if z.im > 0.0 {
                let best = s.values.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-10);
            }
        }
        let id = &s.left * &s.right;
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex64::new(e, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn jordan_block_is_rejected_or_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let r = eigen_analysis(&StateMatrix::from_matrix(a));
        assert!(matches!(
            r,
            Err(ModalError::DefectiveMode(_)) | Err(ModalError::InaccurateEigenpair { .. })
        ));
    }
}
