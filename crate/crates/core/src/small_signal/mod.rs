//! Linearization, eigenanalysis and mode classification.

mod classify;
mod eigen;
mod linearize;

pub use classify::{classify_mode, damping_ratio, ModeCategory};
pub use eigen::{balance, eigen_analysis, participation_factors, spectrum, Mode, ModalResult, Spectrum};
pub use linearize::{linearize, linearize_at, StateMatrix, DEFAULT_H_REL};

use thiserror::Error;

/// Eigenvalues this close to the origin are treated as the structural zero
/// of a system without an angle reference.
pub const STRUCTURAL_ZERO: f64 = 1e-7;

/// Largest accepted `‖A·v − λ·v‖ / ‖A‖` for a unit eigenvector.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModalError {
    #[error("system is not at equilibrium (residual {0:.3e})")]
    NotAtEquilibrium(f64),
    #[error("algebraic Jacobian g_y is singular")]
    SingularAlgebraicJacobian,
    #[error("eigenvalue iteration did not converge near index {0}")]
    NoConvergence(usize),
    #[error("eigenvector matrix is singular at mode {0}")]
    DefectiveMode(usize),
    #[error("eigenpair {index} has residual {residual:.3e}")]
    InaccurateEigenpair { index: usize, residual: f64 },
    #[error("damping ratio is undefined for a zero eigenvalue")]
    ZeroEigenvalue,
    #[error("state matrix has a non-finite entry")]
    NonFinite,
}
