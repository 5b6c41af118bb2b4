//! Antenna gain patterns.
//!
//! The cosine array pattern is `G(theta) = G_max * cos(theta)^k` on the front
//! hemisphere and zero behind it, with `k = max(N/2 - 1, 0)` for `N` elements
//! and `G_max = 2 (k + 1)` so the pattern integrates to `4 pi` over the sphere.
//! With this exponent the boresight gain equals the element count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum AntennaPattern {
    Flat { gain_dbi: f64 },
    CosineArray { n_elements: u32 },
}

impl AntennaPattern {
    pub fn cosine_exponent(n_elements: u32) -> f64 {
        (n_elements as f64 / 2.0 - 1.0).max(0.0)
    }

    /// Linear gain at boresight.
    pub fn peak_gain_linear(&self) -> f64 {
        match *self {
            AntennaPattern::Flat { gain_dbi } => 10f64.powf(gain_dbi / 10.0),
            AntennaPattern::CosineArray { n_elements } => 2.0 * (Self::cosine_exponent(n_elements) + 1.0),
        }
    }

    pub fn boresight_gain_dbi(&self) -> f64 {
        10.0 * self.peak_gain_linear().log10()
    }

    /// Linear gain at an off-boresight angle in radians; no range check.
    pub fn gain_linear(&self, off_boresight_rad: f64) -> f64 {
        match *self {
            AntennaPattern::Flat { .. } => self.peak_gain_linear(),
            AntennaPattern::CosineArray { n_elements } => {
                let c = off_boresight_rad.cos();
                if c <= 0.0 {
                    0.0
                } else {
                    self.peak_gain_linear() * c.powf(Self::cosine_exponent(n_elements))
                }
            }
        }
    }

    pub fn gain_dbi(&self, off_boresight_deg: f64) -> Result<f64> {
        if !(0.0..=180.0).contains(&off_boresight_deg) {
            return Err(Error::domain(format!(
                "off-boresight angle must lie in [0, 180] degrees, got {off_boresight_deg}"
            )));
        }
        Ok(10.0 * self.gain_linear(off_boresight_deg.to_radians()).log10())
    }

    /// Gain relative to boresight in dB, given the cosine of the off-boresight
    /// angle. `-inf` behind the array.
    pub fn relative_gain_db_from_cos(&self, cos_off: f64) -> f64 {
        match *self {
            AntennaPattern::Flat { .. } => 0.0,
            AntennaPattern::CosineArray { n_elements } => {
                if cos_off <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    10.0 * Self::cosine_exponent(n_elements) * cos_off.min(1.0).log10()
                }
            }
        }
    }
}

/// A platform antenna: peak gain from the radio table, angular roll-off from
/// the pattern shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna {
    pub peak_gain_dbi: f64,
    pub shape: AntennaPattern,
}

impl Antenna {
    pub fn omni(gain_dbi: f64) -> Self {
        Antenna {
            peak_gain_dbi: gain_dbi,
            shape: AntennaPattern::Flat { gain_dbi },
        }
    }

    pub fn directional(peak_gain_dbi: f64, shape: AntennaPattern) -> Self {
        Antenna { peak_gain_dbi, shape }
    }

    /// Gain toward a direction whose angle to boresight has cosine `cos_off`.
    pub fn gain_dbi_from_cos(&self, cos_off: f64) -> f64 {
        self.peak_gain_dbi + self.shape.relative_gain_db_from_cos(cos_off)
    }
}

/// Gain of `pattern` at an off-boresight angle.
pub fn antenna_gain(pattern: &AntennaPattern, off_boresight_deg: f64) -> Result<f64> {
    pattern.gain_dbi(off_boresight_deg)
}
