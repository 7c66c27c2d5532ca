//! Polar Newton–Raphson AC power flow.
//!
//! Unknowns are the angles of every non-slack bus and the magnitudes of PQ
//! buses. Exponential loads are re-evaluated at the current magnitude inside
//! the mismatch, and their voltage sensitivity is part of the Jacobian, so
//! convergence stays quadratic. PV reactive limits are not enforced.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::system_model::{build_ybus, BusKind, PowerSystemCase};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerFlowError {
    #[error("power flow diverged after {iterations} iterations (max mismatch {mismatch:.3e} pu)")]
    Diverged { iterations: usize, mismatch: f64 },
    #[error("singular power-flow Jacobian at iteration {0}")]
    SingularJacobian(usize),
    #[error("invalid power-flow options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfOptions {
    pub tolerance: f64,
    pub max_iter: usize,
    /// Start from `1∠0` at PQ buses and `v_set∠0` elsewhere. When false, the
    /// angles are seeded from a lossless DC power flow.
    pub flat_start: bool,
}

impl Default for PfOptions {
    fn default() -> Self {
        PfOptions { tolerance: 1e-8, max_iter: 30, flat_start: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    /// Net injections (generation minus load), per-unit on the system base.
    pub p_inj: Vec<f64>,
    pub q_inj: Vec<f64>,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Infinity-norm mismatch before each Newton update and after the last.
    pub mismatch_history: Vec<f64>,
}

impl PowerFlowSolution {
    pub fn voltage(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.v_mag[i], self.v_ang[i])
    }

    /// Generation at bus `i` (injection plus local load), per-unit.
    pub fn generation(&self, case: &PowerSystemCase, i: usize) -> Complex64 {
        let (pl, ql) = case.bus_load_pu(i, self.v_mag[i]);
        Complex64::new(self.p_inj[i] + pl, self.q_inj[i] + ql)
    }
}

/// Complex power injected at every bus for the given voltage profile.
pub fn bus_injections(y: &DMatrix<Complex64>, v_mag: &[f64], v_ang: &[f64]) -> Vec<Complex64> {
    let v: Vec<Complex64> = v_mag
        .iter()
        .zip(v_ang)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect();
    (0..v.len())
        .map(|i| {
            let current: Complex64 = (0..v.len()).map(|j| y[(i, j)] * v[j]).sum();
            v[i] * current.conj()
        })
        .collect()
}

/// `(P, Q)` injected at bus index `bus`, per-unit: `S_i = V_i·conj(Σ_j Y_ij·V_j)`.
pub fn bus_injection(case: &PowerSystemCase, v_mag: &[f64], v_ang: &[f64], bus: usize) -> (f64, f64) {
    let y = build_ybus(case);
    let s = bus_injections(&y, v_mag, v_ang)[bus];
    (s.re, s.im)
}

/// Scheduled active generation at each bus, per-unit. Slack entries are 0.
fn scheduled_generation(case: &PowerSystemCase) -> Vec<f64> {
    case.buses
        .iter()
        .map(|b| match b.kind {
            BusKind::Slack => 0.0,
            _ => {
                let unit = case.unit_at(b.id).and_then(|u| u.p_set).unwrap_or(0.0);
                (unit + b.p_gen) / case.base.s_base
            }
        })
        .collect()
}

fn dc_angles(case: &PowerSystemCase, p_gen: &[f64]) -> Vec<f64> {
    let n = case.n_buses();
    let slack = case.slack_index();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for br in &case.branches {
        let i = case.bus_index(br.from_bus).unwrap();
        let j = case.bus_index(br.to_bus).unwrap();
        let s = 1.0 / br.x;
        b[(i, i)] += s;
        b[(j, j)] += s;
        b[(i, j)] -= s;
        b[(j, i)] -= s;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let reduced = DMatrix::from_fn(keep.len(), keep.len(), |r, c| b[(keep[r], keep[c])]);
    let p = DVector::from_iterator(
        keep.len(),
        keep.iter().map(|&i| p_gen[i] - case.bus_load_pu(i, 1.0).0),
    );
    let mut ang = vec![case.buses[slack].angle_set; n];
    if let Some(theta) = reduced.lu().solve(&p) {
        for (k, &i) in keep.iter().enumerate() {
            ang[i] += theta[k];
        }
    }
    ang
}

pub fn solve_power_flow(
    case: &PowerSystemCase,
    opts: &PfOptions,
) -> Result<PowerFlowSolution, PowerFlowError> {
    if !(opts.tolerance > 0.0) {
        return Err(PowerFlowError::InvalidOptions("tolerance must be positive"));
    }
    if opts.max_iter < 1 {
        return Err(PowerFlowError::InvalidOptions("max_iter must be at least 1"));
    }
    let n = case.n_buses();
    let y = build_ybus(case);
    let p_gen = scheduled_generation(case);

    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| if b.kind == BusKind::PQ { 1.0 } else { b.v_set })
        .collect();
    let slack = case.slack_index();
    let mut va = if opts.flat_start {
        vec![case.buses[slack].angle_set; n]
    } else {
        dc_angles(case, &p_gen)
    };

    // unknown ordering: angles of non-slack buses, then magnitudes of PQ buses
    let ang_idx: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let mag_idx: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusKind::PQ).collect();
    let na = ang_idx.len();
    let dim = na + mag_idx.len();

    let mismatch = |vm: &[f64], va: &[f64]| -> (Vec<Complex64>, DVector<f64>) {
        let s = bus_injections(&y, vm, va);
        let mut f = DVector::zeros(dim);
        for (k, &i) in ang_idx.iter().enumerate() {
            f[k] = s[i].re - p_gen[i] + case.bus_load_pu(i, vm[i]).0;
        }
        for (k, &i) in mag_idx.iter().enumerate() {
            f[na + k] = s[i].im + case.bus_load_pu(i, vm[i]).1;
        }
        (s, f)
    };

    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let (s, f) = mismatch(&vm, &va);
        let norm = f.amax();
        history.push(norm);
        if !norm.is_finite() {
            return Err(PowerFlowError::Diverged { iterations, mismatch: norm });
        }
        if norm <= opts.tolerance {
            let (p_inj, q_inj) = s.iter().map(|c| (c.re, c.im)).unzip();
            return Ok(PowerFlowSolution {
                v_mag: vm,
                v_ang: va,
                p_inj,
                q_inj,
                iterations,
                max_mismatch: norm,
                mismatch_history: history,
            });
        }
        if iterations >= opts.max_iter {
            return Err(PowerFlowError::Diverged { iterations, mismatch: norm });
        }
        let jac = jacobian(case, &y, &vm, &va, &s, &ang_idx, &mag_idx);
        let dx = jac
            .lu()
            .solve(&(-f))
            .ok_or(PowerFlowError::SingularJacobian(iterations))?;
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(PowerFlowError::SingularJacobian(iterations));
        }
        for (k, &i) in ang_idx.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in mag_idx.iter().enumerate() {
            vm[i] += dx[na + k];
        }
        iterations += 1;
    }
}

fn jacobian(
    case: &PowerSystemCase,
    y: &DMatrix<Complex64>,
    vm: &[f64],
    va: &[f64],
    s: &[Complex64],
    ang_idx: &[usize],
    mag_idx: &[usize],
) -> DMatrix<f64> {
    let na = ang_idx.len();
    let dim = na + mag_idx.len();
    let mut pos_ang = vec![usize::MAX; vm.len()];
    let mut pos_mag = vec![usize::MAX; vm.len()];
    for (k, &i) in ang_idx.iter().enumerate() {
        pos_ang[i] = k;
    }
    for (k, &i) in mag_idx.iter().enumerate() {
        pos_mag[i] = na + k;
    }
    let mut jac = DMatrix::zeros(dim, dim);
    for &i in ang_idx.iter().chain(mag_idx) {
        let (dpl, dql) = case.bus_load_dv_pu(i, vm[i]);
        for j in 0..vm.len() {
            let g = y[(i, j)].re;
            let b = y[(i, j)].im;
            if g == 0.0 && b == 0.0 && i != j {
                continue;
            }
            let (dp_dth, dp_dv, dq_dth, dq_dv) = if i == j {
                (
                    -s[i].im - b * vm[i] * vm[i],
                    s[i].re / vm[i] + g * vm[i] + dpl,
                    s[i].re - g * vm[i] * vm[i],
                    s[i].im / vm[i] - b * vm[i] + dql,
                )
            } else {
                let th = va[i] - va[j];
                let (sn, cs) = th.sin_cos();
                (
                    vm[i] * vm[j] * (g * sn - b * cs),
                    vm[i] * (g * cs + b * sn),
                    -vm[i] * vm[j] * (g * cs + b * sn),
                    vm[i] * (g * sn - b * cs),
                )
            };
            if pos_ang[i] != usize::MAX {
                let r = pos_ang[i];
                if pos_ang[j] != usize::MAX {
                    jac[(r, pos_ang[j])] = dp_dth;
                }
                if pos_mag[j] != usize::MAX {
                    jac[(r, pos_mag[j])] = dp_dv;
                }
            }
            if pos_mag[i] != usize::MAX {
                let r = pos_mag[i];
                if pos_ang[j] != usize::MAX {
                    jac[(r, pos_ang[j])] = dq_dth;
                }
                if pos_mag[j] != usize::MAX {
                    jac[(r, pos_mag[j])] = dq_dv;
                }
            }
        }
    }
    jac
}
