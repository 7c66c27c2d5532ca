//! C¹ saturation used for every controller limit.
//!
//! Hard clamps give the Newton iterations inside the implicit integrator a
//! discontinuous Jacobian. These replace the corner with a quadratic arc of
//! half-width [`BLEND_WIDTH`] on each side of the limit.

pub const BLEND_WIDTH: f64 = 1e-4;

/// Clamp of `x` to `[lo, hi]` with quadratic corners of half-width `w`.
pub fn smooth_clamp(x: f64, lo: f64, hi: f64, w: f64) -> f64 {
    if x > hi - w {
        if x >= hi + w {
            hi
        } else {
            let d = x - (hi + w);
            hi - d * d / (4.0 * w)
        }
    } else if x < lo + w {
        if x <= lo - w {
            lo
        } else {
            let d = x - (lo - w);
            lo + d * d / (4.0 * w)
        }
    } else {
        x
    }
}

/// True when `x` lies on the linear part of [`smooth_clamp`].
pub fn inside_limits(x: f64, lo: f64, hi: f64, w: f64) -> bool {
    x >= lo + w && x <= hi - w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inside_and_flat_outside() {
        assert_eq!(smooth_clamp(0.3, -1.0, 1.0, 1e-4), 0.3);
        assert_eq!(smooth_clamp(3.0, -1.0, 1.0, 1e-4), 1.0);
        assert_eq!(smooth_clamp(-3.0, -1.0, 1.0, 1e-4), -1.0);
    }

    #[test]
    fn continuous_with_continuous_slope() {
        let w = 1e-2;
        let f = |x| smooth_clamp(x, -1.0, 1.0, w);
        for edge in [1.0 - w, 1.0 + w, -1.0 - w, -1.0 + w] {
            let e = 1e-9;
            assert!((f(edge - e) - f(edge + e)).abs() < 1e-8);
            let s1 = (f(edge - e) - f(edge - 2.0 * e)) / e;
            let s2 = (f(edge + 2.0 * e) - f(edge + e)) / e;
            assert!((s1 - s2).abs() < 1e-5, "slope jump at {edge}");
        }
    }
}
