use nalgebra::DMatrix;
use num_complex::Complex64;

use super::PowerSystemCase;

/// Positive-sequence bus admittance matrix, indexed by internal bus index.
pub fn build_ybus(case: &PowerSystemCase) -> DMatrix<Complex64> {
    let n = case.n_buses();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in &case.branches {
        let i = case.bus_index(br.from_bus).expect("validated branch");
        let j = case.bus_index(br.to_bus).expect("validated branch");
        let ys = Complex64::new(br.r, br.x).inv();
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        y[(i, i)] += ys + half;
        y[(j, j)] += ys + half;
        y[(i, j)] -= ys;
        y[(j, i)] -= ys;
    }
    y
}
