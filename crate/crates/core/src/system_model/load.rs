use super::{CaseError, LoadModel};

/// Exponential static load: `P = P0·(V/V0)^a`, `Q = Q0·(V/V0)^b`.
///
/// Returns MW and MVAr. `a = b = 0` is constant power, `1` constant
/// current and `2` constant impedance.
pub fn load_power(load: &LoadModel, v: f64) -> Result<(f64, f64), CaseError> {
    if !(v > 0.0) {
        return Err(CaseError::NonPositiveVoltage(v));
    }
    let ratio = v / load.v0;
    Ok((load.p0 * ratio.powf(load.a), load.q0 * ratio.powf(load.b)))
}
