//! Two-axis sub-transient synchronous machine.
//!
//! Rotor frame convention: the q axis lies along the rotor angle `δ` and the
//! d axis leads it by 90°, so a network phasor maps to the machine frame as
//! `vq + j·vd = V·e^(−jδ)`. In this frame the six rotor equations are
//!
//! ```text
//! dδ/dt    = ω − ω_s
//! dω/dt    = ω_s/(2H)·[T_m − D·(ω − ω_s)/ω_s − T_e]
//! dE'_q/dt = [−E'_q − (X_d − X'_d)·{−I_d − k_d·(ψ_1d − (X'_d − X_ls)·I_d − E'_q)} + E_fd] / T'_do
//! dE'_d/dt = [−E'_d − (X_q − X'_q)·{−I_q − k_q·(ψ_2q − (X'_q − X_ls)·I_q − E'_d)}] / T'_qo
//! dψ_1d/dt = [−ψ_1d + E'_q + (X'_d − X_ls)·I_d] / T''_do
//! dψ_2q/dt = [−ψ_2q + E'_d + (X'_q − X_ls)·I_q] / T''_qo
//! ```
//!
//! with `k_d = (X'_d − X''_d)/(X'_d − X_ls)²` (likewise `k_q`) and electrical
//! torque
//!
//! ```text
//! T_e = c_eq·E'_q·I_q + c_1d·ψ_1d·I_q − c_ed·E'_d·I_d − c_2q·ψ_2q·I_d − (X''_q − X''_d)·I_q·I_d
//! ```
//!
//! where the four `c` are the flux-interpolation weights of
//! [`FluxCoefficients`]. The same weights build the sub-transient EMF behind
//! the stator, which is what makes `T_e` equal air-gap power.

use super::DynamicsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams {
    /// Inertia constant, s.
    pub h: f64,
    /// Damping, per-unit torque per per-unit speed deviation.
    pub d: f64,
    pub xd: f64,
    pub xd_p: f64,
    pub xd_pp: f64,
    pub xq: f64,
    pub xq_p: f64,
    pub xq_pp: f64,
    pub xls: f64,
    pub rs: f64,
    pub tdo_p: f64,
    pub tdo_pp: f64,
    pub tqo_p: f64,
    pub tqo_pp: f64,
}

impl MachineParams {
    pub fn validate(&self) -> Result<(), String> {
        let p = self;
        if !(p.xd > p.xd_p && p.xd_p > p.xd_pp && p.xd_pp > p.xls && p.xls > 0.0) {
            return Err("machine reactances must satisfy xd > xd_p > xd_pp > xls > 0".into());
        }
        if !(p.xq > p.xq_p && p.xq_p > p.xq_pp && p.xq_pp > p.xls) {
            return Err("machine reactances must satisfy xq > xq_p > xq_pp > xls".into());
        }
        if !(p.tdo_p > 0.0 && p.tdo_pp > 0.0 && p.tqo_p > 0.0 && p.tqo_pp > 0.0) {
            return Err("machine time constants must be positive".into());
        }
        if !(p.tdo_p > p.tdo_pp && p.tqo_p > p.tqo_pp) {
            return Err("transient time constants must exceed sub-transient ones".into());
        }
        if !(p.h > 0.0) {
            return Err("inertia constant h must be positive".into());
        }
        if p.rs < 0.0 || p.d < 0.0 {
            return Err("rs and d must be non-negative".into());
        }
        Ok(())
    }

    pub fn flux_coefficients(&self) -> FluxCoefficients {
        let dd = self.xd_p - self.xls;
        let dq = self.xq_p - self.xls;
        FluxCoefficients {
            eq: (self.xd_pp - self.xls) / dd,
            psi_1d: (self.xd_p - self.xd_pp) / dd,
            ed: (self.xq_pp - self.xls) / dq,
            psi_2q: (self.xq_p - self.xq_pp) / dq,
        }
    }
}

/// Weights that split each sub-transient flux between its transient EMF and
/// its damper flux. `eq + psi_1d = 1` and `ed + psi_2q = 1`.
///
/// Both the torque expression and [`stator_algebraic`] read these from the
/// single definition in [`MachineParams::flux_coefficients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCoefficients {
    pub eq: f64,
    pub psi_1d: f64,
    pub ed: f64,
    pub psi_2q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineState {
    pub delta: f64,
    /// Rotor speed, rad/s.
    pub omega: f64,
    pub eq_p: f64,
    pub ed_p: f64,
    pub psi_1d: f64,
    pub psi_2q: f64,
}

impl MachineState {
    pub const NAMES: [&'static str; 6] = ["delta", "omega", "eq_p", "ed_p", "psi_1d", "psi_2q"];

    pub fn from_slice(s: &[f64]) -> Self {
        MachineState {
            delta: s[0],
            omega: s[1],
            eq_p: s[2],
            ed_p: s[3],
            psi_1d: s[4],
            psi_2q: s[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.delta, self.omega, self.eq_p, self.ed_p, self.psi_1d, self.psi_2q]
    }
}

/// Sub-transient EMF `(e''_d, e''_q)` in the rotor frame.
pub fn subtransient_emf(p: &MachineParams, s: &MachineState) -> (f64, f64) {
    let c = p.flux_coefficients();
    let e_q = c.eq * s.eq_p + c.psi_1d * s.psi_1d;
    let e_d = -(c.ed * s.ed_p + c.psi_2q * s.psi_2q);
    (e_d, e_q)
}

/// Electrical torque on the machine base.
pub fn electrical_torque(p: &MachineParams, s: &MachineState, id: f64, iq: f64) -> f64 {
    let c = p.flux_coefficients();
    c.eq * s.eq_p * iq + c.psi_1d * s.psi_1d * iq
        - c.ed * s.ed_p * id
        - c.psi_2q * s.psi_2q * id
        - (p.xq_pp - p.xd_pp) * iq * id
}

/// Time derivatives of the six rotor states, in [`MachineState`] layout.
pub fn machine_derivatives(
    p: &MachineParams,
    s: &MachineState,
    id: f64,
    iq: f64,
    efd: f64,
    tm: f64,
    omega_s: f64,
) -> MachineState {
    let te = electrical_torque(p, s, id, iq);
    let kd = (p.xd_p - p.xd_pp) / (p.xd_p - p.xls).powi(2);
    let kq = (p.xq_p - p.xq_pp) / (p.xq_p - p.xls).powi(2);
    let d_field = s.psi_1d - (p.xd_p - p.xls) * id - s.eq_p;
    let q_damper = s.psi_2q - (p.xq_p - p.xls) * iq - s.ed_p;
    MachineState {
        delta: s.omega - omega_s,
        omega: omega_s / (2.0 * p.h) * (tm - p.d * (s.omega - omega_s) / omega_s - te),
        eq_p: (-s.eq_p - (p.xd - p.xd_p) * (-id - kd * d_field) + efd) / p.tdo_p,
        ed_p: (-s.ed_p - (p.xq - p.xq_p) * (-iq - kq * q_damper)) / p.tqo_p,
        psi_1d: (-s.psi_1d + s.eq_p + (p.xd_p - p.xls) * id) / p.tdo_pp,
        psi_2q: (-s.psi_2q + s.ed_p + (p.xq_p - p.xls) * iq) / p.tqo_pp,
    }
}

/// Solves the stator for the rotor-frame currents given terminal voltage
/// components:
///
/// ```text
/// v_d = e''_d − r_s·i_d − x''_q·i_q
/// v_q = e''_q − r_s·i_q + x''_d·i_d
/// ```
pub fn stator_algebraic(
    p: &MachineParams,
    s: &MachineState,
    vd: f64,
    vq: f64,
) -> Result<(f64, f64), DynamicsError> {
    let det = p.rs * p.rs + p.xd_pp * p.xq_pp;
    if det == 0.0 {
        return Err(DynamicsError::SingularStator);
    }
    let (e_d, e_q) = subtransient_emf(p, s);
    let a = e_d - vd;
    let b = e_q - vq;
    let id = (p.rs * a - p.xq_pp * b) / det;
    let iq = (p.rs * b + p.xd_pp * a) / det;
    Ok((id, iq))
}
