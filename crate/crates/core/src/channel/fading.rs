//! Small-scale fading power draws.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FadingModel {
    None,
    /// Nakagami-m amplitude, unit mean power.
    Nakagami { m: f64 },
    /// Shadowed-Rician: LoS power `omega` with Nakagami-`m` shadowing plus
    /// Rayleigh scatter of power `2 * b0`.
    ShadowedRician { omega: f64, b0: f64, m: f64 },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::None => Ok(()),
            FadingModel::Nakagami { m } => {
                if !(m > 0.0) || !m.is_finite() {
                    return Err(Error::config("nakagami.m", format!("shape must be positive, got {m}")));
                }
                Ok(())
            }
            FadingModel::ShadowedRician { omega, b0, m } => {
                if !(m > 0.0) || !m.is_finite() {
                    return Err(Error::config("shadowed_rician.m", format!("shape must be positive, got {m}")));
                }
                if !(omega >= 0.0) || !omega.is_finite() {
                    return Err(Error::config(
                        "shadowed_rician.omega",
                        format!("LoS power must be non-negative, got {omega}"),
                    ));
                }
                if !(b0 > 0.0) || !b0.is_finite() {
                    return Err(Error::config(
                        "shadowed_rician.b0",
                        format!("multipath half-power must be positive, got {b0}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Expected power gain.
    pub fn mean_power(&self) -> f64 {
        match *self {
            FadingModel::None | FadingModel::Nakagami { .. } => 1.0,
            FadingModel::ShadowedRician { omega, b0, .. } => omega + 2.0 * b0,
        }
    }

    pub fn sampler(&self) -> Result<FadingSampler> {
        self.validate()?;
        let inner = match *self {
            FadingModel::None => SamplerKind::Unit,
            FadingModel::Nakagami { m } => SamplerKind::Gamma(
                Gamma::new(m, 1.0 / m).map_err(|e| Error::config("nakagami.m", e.to_string()))?,
            ),
            FadingModel::ShadowedRician { omega, b0, m } => {
                let los = if omega > 0.0 {
                    Some(Gamma::new(m, omega / m).map_err(|e| Error::config("shadowed_rician", e.to_string()))?)
                } else {
                    None
                };
                let scatter =
                    Normal::new(0.0, b0.sqrt()).map_err(|e| Error::config("shadowed_rician.b0", e.to_string()))?;
                SamplerKind::ShadowedRician { los, scatter }
            }
        };
        Ok(FadingSampler { inner })
    }
}

#[derive(Debug, Clone, Copy)]
enum SamplerKind {
    Unit,
    Gamma(Gamma<f64>),
    ShadowedRician {
        los: Option<Gamma<f64>>,
        scatter: Normal<f64>,
    },
}

/// Prepared sampler for a validated [`FadingModel`].
#[derive(Debug, Clone, Copy)]
pub struct FadingSampler {
    inner: SamplerKind,
}

impl Distribution<f64> for FadingSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            SamplerKind::Unit => 1.0,
            SamplerKind::Gamma(g) => g.sample(rng),
            SamplerKind::ShadowedRician { los, scatter } => {
                // circular scatter makes the LoS phase irrelevant
                let amplitude = los.as_ref().map_or(0.0, |g| g.sample(rng).sqrt());
                let i = amplitude + scatter.sample(rng);
                let q = scatter.sample(rng);
                i * i + q * q
            }
        }
    }
}

/// One power-gain draw from `model`.
pub fn sample_fading_power<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> Result<f64> {
    Ok(model.sampler()?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_mean(model: FadingModel, n: usize, seed: u64) -> f64 {
        let sampler = model.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sampler.sample(&mut rng)).sum::<f64>() / n as f64
    }

    #[test]
    fn none_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_fading_power(&FadingModel::None, &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn nakagami_unit_mean() {
        let mean = sample_mean(FadingModel::Nakagami { m: 2.0 }, 1_000_000, 2);
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn shadowed_rician_mean() {
        let model = FadingModel::ShadowedRician {
            omega: 1.29,
            b0: 0.158,
            m: 19.4,
        };
        let mean = sample_mean(model, 1_000_000, 3);
        assert!((mean - 1.606).abs() < 0.01 * 1.606, "mean {mean}");
        assert!((model.mean_power() - 1.606).abs() < 1e-12);
    }

    #[test]
    fn shadowed_rician_without_los_is_rayleigh() {
        let model = FadingModel::ShadowedRician {
            omega: 0.0,
            b0: 0.5,
            m: 1.0,
        };
        let mean = sample_mean(model, 200_000, 4);
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(FadingModel::Nakagami { m: 0.0 }.validate().is_err());
        assert!(FadingModel::ShadowedRician {
            omega: -1.0,
            b0: 0.1,
            m: 2.0
        }
        .validate()
        .is_err());
        assert!(FadingModel::ShadowedRician {
            omega: 1.0,
            b0: 0.0,
            m: 2.0
        }
        .validate()
        .is_err());
    }
}
