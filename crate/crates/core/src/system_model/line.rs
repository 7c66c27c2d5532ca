use num_complex::Complex64;

use super::CaseError;

/// sinh(u)/u, with the Taylor branch near zero.
fn sinhc(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        let u2 = u * u;
        1.0 + u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sinh() / u
    }
}

/// tanh(u)/u, with the Taylor branch near zero.
fn tanhc(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 3.0 + 2.0 * u2 * u2 / 15.0
    } else {
        u.tanh() / u
    }
}

/// Lumped two-port values of a PI section: series impedance and total
/// shunt admittance (half at each end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineTwoPort {
    pub series: Complex64,
    pub shunt_total: Complex64,
}

/// Exact-PI equivalent of a uniformly distributed line.
///
/// With `γ = √(z·y)` and `Z_c = √(z/y)` built from the per-km series
/// impedance `z = r + jx` and shunt admittance `y = jb`, the series arm is
/// `Z_c·sinh(γℓ)` and the total shunt is `2·tanh(γℓ/2)/Z_c`. Both are
/// evaluated as nominal value times a correction factor so the `γℓ → 0`
/// limit (and `b = 0`) is exact. The shunt conductance produced by a lossy
/// line is dropped; it is orders of magnitude below the susceptance.
pub fn long_line_to_pi(
    r_per_km: f64,
    x_per_km: f64,
    b_per_km: f64,
    length_km: f64,
) -> Result<(f64, f64, f64), CaseError> {
    let pi = exact_pi_two_port(r_per_km, x_per_km, b_per_km, length_km)?;
    Ok((pi.series.re, pi.series.im, pi.shunt_total.im))
}

/// Same as [`long_line_to_pi`] but keeps the complex two-port values.
pub fn exact_pi_two_port(
    r_per_km: f64,
    x_per_km: f64,
    b_per_km: f64,
    length_km: f64,
) -> Result<LineTwoPort, CaseError> {
    if r_per_km == 0.0 && x_per_km == 0.0 && b_per_km == 0.0 {
        return Err(CaseError::DegenerateLine);
    }
    if !(length_km > 0.0) {
        return Err(CaseError::MalformedCase {
            line: 0,
            reason: format!("exact-PI conversion needs a positive length, got {length_km}"),
        });
    }
    let z = Complex64::new(r_per_km, x_per_km) * length_km;
    let y = Complex64::new(0.0, b_per_km) * length_km;
    let u = (z * y).sqrt();
    Ok(LineTwoPort { series: z * sinhc(u), shunt_total: y * tanhc(u / 2.0) })
}

/// Converts lumped nominal totals of a line into its exact-PI values.
pub fn exact_pi_from_totals(
    r: f64,
    x: f64,
    b: f64,
    length_km: f64,
) -> Result<(f64, f64, f64), CaseError> {
    long_line_to_pi(r / length_km, x / length_km, b / length_km, length_km)
}

/// Branch impedances in physical units: ohms for the series arm and
/// microsiemens for the total shunt susceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalBranch {
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub b_us: f64,
}

fn z_base(base_kv: f64, s_base: f64) -> f64 {
    base_kv * base_kv / s_base
}

pub fn pu_to_ohms(r: f64, x: f64, b: f64, base_kv: f64, s_base: f64) -> PhysicalBranch {
    let zb = z_base(base_kv, s_base);
    PhysicalBranch { r_ohm: r * zb, x_ohm: x * zb, b_us: b / zb * 1e6 }
}

pub fn ohms_to_pu(p: PhysicalBranch, base_kv: f64, s_base: f64) -> (f64, f64, f64) {
    let zb = z_base(base_kv, s_base);
    (p.r_ohm / zb, p.x_ohm / zb, p.b_us * 1e-6 * zb)
}
