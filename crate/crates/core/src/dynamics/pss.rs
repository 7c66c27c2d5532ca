//! Multi-band stabilizer driven by speed deviation.
//!
//! Each of the low, intermediate and high bands is a differencer: the same
//! input goes through two cascades of two identical first-order lags, one
//! tuned slightly faster (`T/R`) and one slightly slower (`T·R`) than the
//! band's centre `T = 1/(2π·f)`. Their difference vanishes at DC, rolls off
//! at high frequency and peaks near `f`.

use super::smooth::{smooth_clamp, BLEND_WIDTH};

/// Detuning ratio between the two paths of a band.
pub const BAND_DETUNING: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssBand {
    /// Centre frequency, Hz.
    pub freq: f64,
    pub gain: f64,
}

impl PssBand {
    /// Time constants of the fast and slow paths.
    pub fn time_constants(&self) -> (f64, f64) {
        let t = 1.0 / (2.0 * std::f64::consts::PI * self.freq);
        (t / BAND_DETUNING, t * BAND_DETUNING)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssMB {
    pub low: PssBand,
    pub intermediate: PssBand,
    pub high: PssBand,
    pub vs_min: f64,
    pub vs_max: f64,
}

impl PssMB {
    pub const N_STATES: usize = 12;
    pub const STATE_NAMES: [&'static str; 12] = [
        "pss_l_fast1", "pss_l_fast2", "pss_l_slow1", "pss_l_slow2",
        "pss_i_fast1", "pss_i_fast2", "pss_i_slow1", "pss_i_slow2",
        "pss_h_fast1", "pss_h_fast2", "pss_h_slow1", "pss_h_slow2",
    ];

    pub fn bands(&self) -> [PssBand; 3] {
        [self.low, self.intermediate, self.high]
    }

    pub fn validate(&self) -> Result<(), String> {
        let (l, i, h) = (self.low.freq, self.intermediate.freq, self.high.freq);
        if !(0.0 < l && l < i && i < h) {
            return Err("pss band frequencies must satisfy 0 < f_l < f_i < f_h".into());
        }
        if self.bands().iter().any(|b| b.gain < 0.0) {
            return Err("pss gains must be non-negative".into());
        }
        if !(self.vs_min < self.vs_max) {
            return Err("pss needs vs_min < vs_max".into());
        }
        Ok(())
    }
}

/// Band output `fast2 − slow2` for one band's four states.
fn band_output(x: &[f64]) -> f64 {
    x[1] - x[3]
}

/// State derivatives (12 entries) and the stabilizing signal.
pub fn pss_derivatives(p: &PssMB, x: &[f64], speed_dev: f64) -> ([f64; 12], f64) {
    let mut d = [0.0; 12];
    let mut sum = 0.0;
    for (k, band) in p.bands().iter().enumerate() {
        let s = &x[4 * k..4 * k + 4];
        let (tf, ts) = band.time_constants();
        d[4 * k] = (speed_dev - s[0]) / tf;
        d[4 * k + 1] = (s[0] - s[1]) / tf;
        d[4 * k + 2] = (speed_dev - s[2]) / ts;
        d[4 * k + 3] = (s[2] - s[3]) / ts;
        sum += band.gain * band_output(s);
    }
    (d, smooth_clamp(sum, p.vs_min, p.vs_max, BLEND_WIDTH))
}
