//! One-step TR-BDF2 for semi-explicit DAEs.
//!
//! A step of size `h` first takes a trapezoidal stage to `t + γh`, then a
//! BDF2 stage through `t`, `t + γh` and `t + h`. With `γ = 2 − √2` both
//! stages share the coefficient `c = γ/2`, so one factorization of
//! `[[I − c·h·f_x, −c·h·f_y], [g_x, g_y]]` serves the whole step.

use nalgebra::{DMatrix, DVector};

use super::SimError;

pub const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const C: f64 = GAMMA / 2.0;
/// Coefficients of the BDF2 stage: `x₁ = A1·x_γ − A0·x₀ + c·h·f₁`, with
/// `A1 − A0 = 1`.
#[cfg(test)]
const A1: f64 = 1.0 / (GAMMA * (2.0 - GAMMA));
const A0: f64 = (1.0 - GAMMA) * (1.0 - GAMMA) / (GAMMA * (2.0 - GAMMA));
/// Leading error constant.
const ERR_C: f64 = (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));

const NEWTON_MAX_ITER: usize = 10;
const NEWTON_TOL: f64 = 1e-3;

/// `ẋ = f(x, y)`, `0 = g(x, y)`.
pub trait DaeSystem {
    fn n_x(&self) -> usize;
    fn n_y(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]);
}

/// Result of one accepted or attempted step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub x_gamma: Vec<f64>,
    pub y_gamma: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    /// Weighted error norm; the step is acceptable when `≤ 1`.
    pub error: f64,
}

/// Step-to-step solver state: Jacobian blocks and the factorized iteration
/// matrix, reused while Newton keeps converging.
pub struct Stepper<'a, S: DaeSystem + ?Sized> {
    sys: &'a S,
    pub rel_tol: f64,
    pub abs_tol: f64,
    jac: Option<DMatrix<f64>>,
    lu: Option<(f64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
    pub jacobian_evals: usize,
}

enum Newton {
    Converged(Vec<f64>, usize),
    Failed(f64),
}

impl<'a, S: DaeSystem + ?Sized> Stepper<'a, S> {
    pub fn new(sys: &'a S, rel_tol: f64, abs_tol: f64) -> Self {
        Stepper { sys, rel_tol, abs_tol, jac: None, lu: None, jacobian_evals: 0 }
    }

    fn n(&self) -> usize {
        self.sys.n_x() + self.sys.n_y()
    }

    fn eval(&self, z: &[f64], f: &mut [f64], g: &mut [f64]) {
        let nx = self.sys.n_x();
        self.sys.eval(&z[..nx], &z[nx..], f, g);
    }

    /// Forward-difference Jacobian `[f_z; g_z]` at `z`.
    fn refresh_jacobian(&mut self, z: &[f64]) {
        let (nx, n) = (self.sys.n_x(), self.n());
        let ny = n - nx;
        let mut f0 = vec![0.0; nx];
        let mut g0 = vec![0.0; ny];
        self.eval(z, &mut f0, &mut g0);
        let mut jac = DMatrix::zeros(n, n);
        let mut zp = z.to_vec();
        let mut f1 = vec![0.0; nx];
        let mut g1 = vec![0.0; ny];
        for j in 0..n {
            let h = 1e-7 * z[j].abs().max(1.0);
            zp[j] = z[j] + h;
            self.eval(&zp, &mut f1, &mut g1);
            zp[j] = z[j];
            for i in 0..nx {
                jac[(i, j)] = (f1[i] - f0[i]) / h;
            }
            for i in 0..ny {
                jac[(nx + i, j)] = (g1[i] - g0[i]) / h;
            }
        }
        self.jac = Some(jac);
        self.lu = None;
        self.jacobian_evals += 1;
    }

    fn factor(&mut self, h: f64) -> Result<(), SimError> {
        if let Some((hh, _)) = &self.lu {
            if *hh == h {
                return Ok(());
            }
        }
        let nx = self.sys.n_x();
        let jac = self.jac.as_ref().expect("jacobian computed before factorization");
        let mut m = jac.clone();
        for i in 0..nx {
            for j in 0..m.ncols() {
                m[(i, j)] *= -C * h;
            }
            m[(i, i)] += 1.0;
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(SimError::SingularIterationMatrix);
        }
        self.lu = Some((h, lu));
        Ok(())
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }

    /// Simplified Newton for `z − c·h·F(z) − rhs = 0` on the differential
    /// rows and `g(z) = 0` on the algebraic rows.
    fn newton(&self, h: f64, rhs: &[f64], mut z: Vec<f64>) -> Newton {
        let (nx, n) = (self.sys.n_x(), self.n());
        let lu = &self.lu.as_ref().expect("factorized").1;
        let mut f = vec![0.0; nx];
        let mut g = vec![0.0; n - nx];
        let mut last = f64::INFINITY;
        for it in 1..=NEWTON_MAX_ITER {
            self.eval(&z, &mut f, &mut g);
            let mut r = DVector::zeros(n);
            for i in 0..nx {
                r[i] = -(z[i] - C * h * f[i] - rhs[i]);
            }
            for i in 0..n - nx {
                r[nx + i] = -g[i];
            }
            let dz = match lu.solve(&r) {
                Some(d) => d,
                None => return Newton::Failed(f64::INFINITY),
            };
            let norm = (0..n).fold(0.0f64, |m, i| m.max(dz[i].abs() / self.weight(z[i], z[i])));
            for i in 0..n {
                z[i] += dz[i];
            }
            if !norm.is_finite() {
                return Newton::Failed(norm);
            }
            if norm <= NEWTON_TOL {
                return Newton::Converged(z, it);
            }
            if it > 2 && norm > 0.9 * last {
                return Newton::Failed(r.amax());
            }
            last = norm;
        }
        Newton::Failed(last)
    }

    /// Solves one stage, refreshing the Jacobian once if the stale one fails.
    fn stage(&mut self, h: f64, rhs: &[f64], guess: Vec<f64>, fresh: &mut bool) -> Result<Vec<f64>, SimError> {
        loop {
            self.factor(h)?;
            match self.newton(h, rhs, guess.clone()) {
                Newton::Converged(z, it) => {
                    if it > 4 && !*fresh {
                        // still converged, but slowly: refresh for the next solve
                        self.refresh_jacobian(&z);
                        *fresh = true;
                    }
                    return Ok(z);
                }
                Newton::Failed(res) => {
                    if *fresh {
                        return Err(SimError::NewtonFailure { t: f64::NAN, residual: res });
                    }
                    self.refresh_jacobian(&guess);
                    *fresh = true;
                }
            }
        }
    }

    /// One TR-BDF2 step from `(x0, y0)` with derivative `f0 = f(x0, y0)`.
    pub fn step(&mut self, h: f64, x0: &[f64], y0: &[f64], f0: &[f64]) -> Result<StepOutput, SimError> {
        let (nx, n) = (self.sys.n_x(), self.n());
        let mut fresh = false;
        if self.jac.is_none() {
            let z0: Vec<f64> = x0.iter().chain(y0).copied().collect();
            self.refresh_jacobian(&z0);
            fresh = true;
        }

        // trapezoidal stage to t + γh
        let rhs1: Vec<f64> = (0..nx).map(|i| x0[i] + C * h * f0[i]).collect();
        let guess: Vec<f64> = (0..nx).map(|i| x0[i] + GAMMA * h * f0[i]).chain(y0.iter().copied()).collect();
        let zg = self.stage(h, &rhs1, guess, &mut fresh)?;
        let (xg, yg) = zg.split_at(nx);

        // BDF2 stage to t + h
        let rhs2: Vec<f64> = (0..nx).map(|i| xg[i] + A0 * (xg[i] - x0[i])).collect();
        let guess: Vec<f64> = (0..nx)
            .map(|i| x0[i] + (xg[i] - x0[i]) / GAMMA)
            .chain(yg.iter().copied())
            .collect();
        let z1 = self.stage(h, &rhs2, guess, &mut fresh)?;
        let (x1, y1) = z1.split_at(nx);

        let mut fg = vec![0.0; nx];
        let mut f1 = vec![0.0; nx];
        let mut g = vec![0.0; n - nx];
        self.eval(&zg, &mut fg, &mut g);
        self.eval(&z1, &mut f1, &mut g);

        // local error estimate, filtered through the iteration matrix
        let mut est = DVector::zeros(n);
        for i in 0..nx {
            est[i] = 2.0 * ERR_C * h
                * (f0[i] / GAMMA - fg[i] / (GAMMA * (1.0 - GAMMA)) + f1[i] / (1.0 - GAMMA));
        }
        self.factor(h)?;
        let lu = &self.lu.as_ref().expect("factorized").1;
        let filtered = lu.solve(&est).unwrap_or(est);
        let error = (0..nx).fold(0.0f64, |m, i| m.max(filtered[i].abs() / self.weight(x0[i], x1[i])));

        Ok(StepOutput {
            x_gamma: xg.to_vec(),
            y_gamma: yg.to_vec(),
            x: x1.to_vec(),
            y: y1.to_vec(),
            f: f1,
            error,
        })
    }

    /// Drops the cached Jacobian, e.g. after an input change.
    pub fn invalidate(&mut self) {
        self.jac = None;
        self.lu = None;
    }
}

/// Single TR-BDF2 step with a fresh Jacobian.
pub fn trbdf2_step<S: DaeSystem + ?Sized>(
    sys: &S,
    h: f64,
    x0: &[f64],
    y0: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<StepOutput, SimError> {
    let mut f0 = vec![0.0; sys.n_x()];
    let mut g0 = vec![0.0; sys.n_y()];
    sys.eval(x0, y0, &mut f0, &mut g0);
    Stepper::new(sys, rel_tol, abs_tol).step(h, x0, y0, &f0)
}
