use nalgebra::DMatrix;

use super::ModalError;
use crate::dynamics::DynamicSystem;

pub const DEFAULT_H_REL: f64 = 1e-6;

/// Reduced state matrix of the linearized DAE.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub a: DMatrix<f64>,
    /// Input matrix, `n_x × n_u`.
    pub b: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
}

impl StateMatrix {
    /// Wraps a bare matrix with generic labels `x0, x1, …`.
    pub fn from_matrix(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        StateMatrix {
            b: DMatrix::zeros(n, 0),
            state_labels: (0..n).map(|k| format!("x{k}")).collect(),
            input_labels: Vec::new(),
            a,
        }
    }
}

/// Linearizes at the stored equilibrium.
pub fn linearize(sys: &DynamicSystem, h_rel: f64) -> Result<StateMatrix, ModalError> {
    let eq = sys.equilibrium();
    let res = sys.residual_norm(&eq.x0, &eq.y0, &eq.u0);
    if !(res < 1e-6) {
        return Err(ModalError::NotAtEquilibrium(res));
    }
    linearize_at(sys, &eq.x0, &eq.y0, &eq.u0, h_rel)
}

/// Central-difference linearization at an arbitrary point, without the
/// equilibrium check.
pub fn linearize_at(
    sys: &DynamicSystem,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    h_rel: f64,
) -> Result<StateMatrix, ModalError> {
    let (nx, ny, nu) = (sys.n_states(), sys.n_algebraic(), sys.n_inputs());
    let mut fz = DMatrix::zeros(nx, nx + ny + nu);
    let mut gz = DMatrix::zeros(ny, nx + ny + nu);
    let mut z: Vec<f64> = x.iter().chain(y).chain(u).copied().collect();
    let mut f_plus = vec![0.0; nx];
    let mut g_plus = vec![0.0; ny];
    let mut f_minus = vec![0.0; nx];
    let mut g_minus = vec![0.0; ny];
    let eval = |z: &[f64], f: &mut [f64], g: &mut [f64]| {
        sys.residual(&z[..nx], &z[nx..nx + ny], &z[nx + ny..], f, g);
    };
    for j in 0..z.len() {
        let z0 = z[j];
        let h = h_rel * z0.abs().max(1.0);
        z[j] = z0 + h;
        eval(&z, &mut f_plus, &mut g_plus);
        z[j] = z0 - h;
        eval(&z, &mut f_minus, &mut g_minus);
        z[j] = z0;
        let span = 2.0 * h;
        for i in 0..nx {
            fz[(i, j)] = (f_plus[i] - f_minus[i]) / span;
        }
        for i in 0..ny {
            gz[(i, j)] = (g_plus[i] - g_minus[i]) / span;
        }
    }
    let fx = fz.columns(0, nx);
    let fy = fz.columns(nx, ny);
    let fu = fz.columns(nx + ny, nu);
    let gx = gz.columns(0, nx);
    let gy = gz.columns(nx, ny).into_owned();
    let gu = gz.columns(nx + ny, nu);

    let (a, b) = if ny == 0 {
        (fx.into_owned(), fu.into_owned())
    } else {
        let lu = gy.lu();
        let mut rhs = DMatrix::zeros(ny, nx + nu);
        rhs.columns_mut(0, nx).copy_from(&gx);
        rhs.columns_mut(nx, nu).copy_from(&gu);
        let sol = lu.solve(&rhs).ok_or(ModalError::SingularAlgebraicJacobian)?;
        let reduced = &fy * sol;
        (fx - reduced.columns(0, nx), fu - reduced.columns(nx, nu))
    };
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(ModalError::NonFinite);
    }
    Ok(StateMatrix {
        a,
        b,
        state_labels: sys.state_labels().to_vec(),
        input_labels: sys.input_labels().to_vec(),
    })
}
