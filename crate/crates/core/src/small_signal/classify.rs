use std::fmt;

use num_complex::Complex64;

use super::ModalError;

/// Oscillation categories by frequency band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeCategory {
    InterArea,
    LocalPlant,
    InterPlant,
    ControlMode,
    Torsional,
    NonOscillatory,
    Unclassified,
}

impl ModeCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeCategory::InterArea => "InterArea",
            ModeCategory::LocalPlant => "LocalPlant",
            ModeCategory::InterPlant => "InterPlant",
            ModeCategory::ControlMode => "ControlMode",
            ModeCategory::Torsional => "Torsional",
            ModeCategory::NonOscillatory => "NonOscillatory",
            ModeCategory::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for ModeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Band of a mode frequency. Bands are closed below and open above, except
/// the torsional band which includes 46 Hz.
pub fn classify_mode(freq_hz: f64) -> ModeCategory {
    match freq_hz {
        f if f == 0.0 => ModeCategory::NonOscillatory,
        f if (0.3..1.0).contains(&f) => ModeCategory::InterArea,
        f if (1.0..2.0).contains(&f) => ModeCategory::LocalPlant,
        f if (2.0..3.0).contains(&f) => ModeCategory::InterPlant,
        f if (4.0..10.0).contains(&f) => ModeCategory::ControlMode,
        f if (10.0..=46.0).contains(&f) => ModeCategory::Torsional,
        _ => ModeCategory::Unclassified,
    }
}

/// `ζ = −Re(λ)/|λ|`.
pub fn damping_ratio(lambda: Complex64) -> Result<f64, ModalError> {
    let m = lambda.norm();
    if m == 0.0 {
        return Err(ModalError::ZeroEigenvalue);
    }
    Ok((-lambda.re / m).clamp(-1.0, 1.0))
}
