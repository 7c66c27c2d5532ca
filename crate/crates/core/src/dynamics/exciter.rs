use super::smooth::{smooth_clamp, BLEND_WIDTH};

/// Static (thyristor) exciter: voltage transducer lag, optional TC/TB
/// lead-lag on the error, static gain KA and a non-windup output clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExciterST1A {
    pub tr: f64,
    pub ka: f64,
    pub tb: f64,
    pub tc: f64,
    pub efd_min: f64,
    pub efd_max: f64,
}

impl Default for ExciterST1A {
    fn default() -> Self {
        ExciterST1A { tr: 0.02, ka: 200.0, tb: 0.0, tc: 0.0, efd_min: -6.0, efd_max: 6.0 }
    }
}

impl ExciterST1A {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tr > 0.0) {
            return Err("exciter tr must be positive".into());
        }
        if !(self.ka > 0.0) {
            return Err("exciter ka must be positive".into());
        }
        if !(self.efd_min < self.efd_max) {
            return Err("exciter needs efd_min < efd_max".into());
        }
        if self.tb < 0.0 || self.tc < 0.0 {
            return Err("exciter tb and tc must be non-negative".into());
        }
        if self.tb == 0.0 && self.tc != 0.0 {
            return Err("exciter lead-lag with tb = 0 needs tc = 0".into());
        }
        Ok(())
    }

    pub fn has_lead_lag(&self) -> bool {
        self.tb > 0.0
    }

    pub fn n_states(&self) -> usize {
        if self.has_lead_lag() {
            2
        } else {
            1
        }
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        if self.has_lead_lag() {
            &["vm", "lead_lag"]
        } else {
            &["vm"]
        }
    }
}

/// Exciter state derivatives (first `n_states()` entries used) and field
/// voltage output.
///
/// `x[0]` is the measured voltage; `x[1]`, when the lead-lag is active, is
/// the lag part of `(1 + s·TC)/(1 + s·TB)` acting on `Vref − Vm + Vpss`.
pub fn exciter_derivatives(
    e: &ExciterST1A,
    x: &[f64],
    v_terminal: f64,
    v_ref: f64,
    v_pss: f64,
) -> ([f64; 2], f64) {
    let vm = x[0];
    let err = v_ref - vm + v_pss;
    let mut d = [(v_terminal - vm) / e.tr, 0.0];
    let shaped = if e.has_lead_lag() {
        let lag = x[1];
        d[1] = (err - lag) / e.tb;
        lag + e.tc / e.tb * (err - lag)
    } else {
        err
    };
    let efd = smooth_clamp(e.ka * shaped, e.efd_min, e.efd_max, BLEND_WIDTH);
    (d, efd)
}
