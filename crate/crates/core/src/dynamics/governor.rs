//! Turbine-governor models.
//!
//! Both models take the per-unit speed deviation `(ω − ω_s)/ω_s` and a
//! power reference and return mechanical torque on the machine base.

use super::smooth::{smooth_clamp, BLEND_WIDTH};

/// PID governor with permanent droop, gate servo and a nonlinear
/// single-penstock hydraulic turbine.
///
/// States: `[integrator, derivative filter, gate, flow]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroGovernor {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter time constant, s.
    pub td: f64,
    pub ta_servo: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// Gate rate limit, per-unit/s.
    pub rate_limit: f64,
    /// Water starting time, s.
    pub tw: f64,
    pub at: f64,
    pub q_nl: f64,
    pub r_perm: f64,
}

impl Default for HydroGovernor {
    fn default() -> Self {
        HydroGovernor {
            kp: 1.163,
            ki: 0.105,
            kd: 0.0,
            td: 0.05,
            ta_servo: 0.3,
            g_min: 0.01,
            g_max: 1.0,
            rate_limit: 0.1,
            tw: 2.0,
            at: 1.1,
            q_nl: 0.08,
            r_perm: 0.05,
        }
    }
}

/// Simple-cycle gas turbine: droop fuel command through valve, combustor
/// and turbine lags.
///
/// States: `[valve, combustor, turbine]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasGovernor {
    pub r_droop: f64,
    pub t_valve: f64,
    pub t_comb: f64,
    pub t_turb: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub k_turb: f64,
}

impl Default for GasGovernor {
    fn default() -> Self {
        GasGovernor {
            r_droop: 0.05,
            t_valve: 0.05,
            t_comb: 0.2,
            t_turb: 0.5,
            f_min: -0.1,
            f_max: 1.5,
            k_turb: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Governor {
    Hydro(HydroGovernor),
    Gas(GasGovernor),
}

impl HydroGovernor {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tw > 0.0) {
            return Err("hydro tw must be positive".into());
        }
        if !(self.ta_servo > 0.0) {
            return Err("hydro ta_servo must be positive".into());
        }
        if !(self.td > 0.0) {
            return Err("hydro td must be positive".into());
        }
        if !(self.g_min < self.g_max) {
            return Err("hydro needs g_min < g_max".into());
        }
        if !(self.g_min > 0.0) {
            return Err("hydro g_min must be positive (head is (q/g)^2)".into());
        }
        if !(self.rate_limit > 0.0 && self.at > 0.0) {
            return Err("hydro rate_limit and at must be positive".into());
        }
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 || self.r_perm < 0.0 {
            return Err("hydro gains and droop must be non-negative".into());
        }
        Ok(())
    }

    /// Gate opening that delivers `p_ref` at rated head and zero speed error.
    pub fn gate_reference(&self, p_ref: f64) -> f64 {
        p_ref / self.at + self.q_nl
    }
}

impl GasGovernor {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t_valve > 0.0 && self.t_comb > 0.0 && self.t_turb > 0.0) {
            return Err("gas time constants must be positive".into());
        }
        if !(self.f_min < self.f_max) {
            return Err("gas needs f_min < f_max".into());
        }
        if !(self.r_droop > 0.0 && self.k_turb > 0.0) {
            return Err("gas r_droop and k_turb must be positive".into());
        }
        Ok(())
    }
}

impl Governor {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Governor::Hydro(g) => g.validate(),
            Governor::Gas(g) => g.validate(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_names().len()
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        match self {
            Governor::Hydro(_) => &["gov_int", "gov_deriv", "gate", "flow"],
            Governor::Gas(_) => &["valve", "combustor", "turbine"],
        }
    }

    pub fn derivatives(&self, x: &[f64], speed_dev: f64, p_ref: f64) -> ([f64; 4], f64) {
        match self {
            Governor::Hydro(g) => hydro_derivatives(g, x, speed_dev, p_ref),
            Governor::Gas(g) => {
                let (d, tm) = gas_derivatives(g, x, speed_dev, p_ref);
                ([d[0], d[1], d[2], 0.0], tm)
            }
        }
    }
}

pub fn hydro_derivatives(
    g: &HydroGovernor,
    x: &[f64],
    speed_dev: f64,
    p_ref: f64,
) -> ([f64; 4], f64) {
    let (integ, filt, gate, flow) = (x[0], x[1], x[2], x[3]);
    let err = g.r_perm * (g.gate_reference(p_ref) - gate) - speed_dev;
    let d_filt = (err - filt) / g.td;
    let command = g.kp * err + integ + g.kd * d_filt;
    let target = smooth_clamp(command, g.g_min, g.g_max, BLEND_WIDTH);
    let d_gate = smooth_clamp((target - gate) / g.ta_servo, -g.rate_limit, g.rate_limit, BLEND_WIDTH);
    let head = (flow / gate).powi(2);
    let d_flow = (1.0 - head) / g.tw;
    let tm = g.at * head * (flow - g.q_nl);
    ([g.ki * err, d_filt, d_gate, d_flow], tm)
}

pub fn gas_derivatives(
    g: &GasGovernor,
    x: &[f64],
    speed_dev: f64,
    p_ref: f64,
) -> ([f64; 3], f64) {
    let (valve, comb, turb) = (x[0], x[1], x[2]);
    let fuel = smooth_clamp(p_ref - speed_dev / g.r_droop, g.f_min, g.f_max, BLEND_WIDTH);
    let d = [
        (fuel - valve) / g.t_valve,
        (valve - comb) / g.t_comb,
        (comb - turb) / g.t_turb,
    ];
    (d, g.k_turb * turb)
}
