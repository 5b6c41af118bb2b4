//! Fading-averaged Shannon capacity.

use rand::Rng;
use rand_distr::Distribution;

use super::{db_to_linear, fspl, BlockageModel, ChannelModel, FadingModel, LinkBudget, LinkGeometry, RadioParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub mean_bps: f64,
    pub std_error_bps: f64,
    pub draws: usize,
}

/// Monte Carlo mean of the Shannon capacity over blockage and fading draws at
/// fixed geometry. `radio` supplies the receive bandwidth and noise density.
pub fn average_capacity<R: Rng + ?Sized>(
    geometry: &LinkGeometry,
    channel: &ChannelModel,
    budget: &LinkBudget,
    radio: &RadioParams,
    n_draws: usize,
    rng: &mut R,
) -> Result<CapacityEstimate> {
    if n_draws == 0 {
        return Err(Error::config("fading_draws", "need at least one fading draw"));
    }
    channel.blockage.validate()?;
    let sampler = channel.fading.sampler()?;
    let snr_los = db_to_linear(budget.rx_dbm(geometry.distance_m)? - radio.noise_dbm());
    let blocked = db_to_linear(-channel.blockage.excess_loss_db);
    let p_los = channel.blockage.model.los_probability(geometry);
    let random_state = !matches!(channel.blockage.model, BlockageModel::AlwaysLos);

    // Welford; identical draws reproduce the deterministic value bit for bit
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=n_draws {
        let state_factor = if random_state && rng.random::<f64>() >= p_los {
            blocked
        } else {
            1.0
        };
        let h = sampler.sample(rng);
        let c = radio.bandwidth_hz * (1.0 + snr_los * state_factor * h).log2();
        let delta = c - mean;
        mean += delta / k as f64;
        m2 += delta * (c - mean);
    }
    let std_error_bps = if n_draws > 1 {
        (m2 / (n_draws - 1) as f64 / n_draws as f64).sqrt()
    } else {
        0.0
    };
    Ok(CapacityEstimate {
        mean_bps: mean,
        std_error_bps,
        draws: n_draws,
    })
}

const GRID_MIN_DB: f64 = -60.0;
const GRID_MAX_DB: f64 = 100.0;
const GRID_STEP_DB: f64 = 0.1;

/// Fading-averaged spectral efficiency `E[log2(1 + snr * h)]` tabulated on an
/// SNR grid from one fixed set of fading draws.
///
/// All lookups share the same draws, so the table is exactly monotone in SNR
/// and a given SNR always maps to the same value. Between grid points the
/// value is interpolated linearly in dB.
#[derive(Debug, Clone)]
pub struct ErgodicCapacity {
    fading: FadingModel,
    se: Vec<f64>,
}

impl ErgodicCapacity {
    pub fn tabulate<R: Rng + ?Sized>(fading: &FadingModel, draws: usize, rng: &mut R) -> Result<Self> {
        if draws == 0 {
            return Err(Error::config("fading_draws", "need at least one fading draw"));
        }
        let gains: Vec<f64> = match fading {
            FadingModel::None => vec![1.0],
            other => {
                let sampler = other.sampler()?;
                (0..draws).map(|_| sampler.sample(rng)).collect()
            }
        };
        let n = ((GRID_MAX_DB - GRID_MIN_DB) / GRID_STEP_DB).round() as usize + 1;
        let inv = 1.0 / gains.len() as f64;
        let se = (0..n)
            .map(|i| {
                let snr = db_to_linear(GRID_MIN_DB + i as f64 * GRID_STEP_DB);
                gains.iter().map(|&h| (snr * h).ln_1p()).sum::<f64>() * inv / std::f64::consts::LN_2
            })
            .collect();
        Ok(ErgodicCapacity { fading: *fading, se })
    }

    pub fn fading(&self) -> &FadingModel {
        &self.fading
    }

    /// Mean spectral efficiency in bit/s/Hz at a pre-fading SNR in dB.
    pub fn spectral_efficiency(&self, snr_db: f64) -> f64 {
        if snr_db.is_nan() {
            return f64::NAN;
        }
        let last = self.se.len() - 1;
        if snr_db <= GRID_MIN_DB {
            // linear regime: proportional to snr
            return self.se[0] * db_to_linear(snr_db - GRID_MIN_DB);
        }
        if snr_db >= GRID_MAX_DB {
            return self.se[last] + (snr_db - GRID_MAX_DB) * std::f64::consts::LOG2_10 / 10.0;
        }
        let pos = (snr_db - GRID_MIN_DB) / GRID_STEP_DB;
        let i = (pos.floor() as usize).min(last - 1);
        let t = pos - i as f64;
        self.se[i] + t * (self.se[i + 1] - self.se[i])
    }

    pub fn capacity_bps(&self, bandwidth_hz: f64, snr_db: f64) -> f64 {
        bandwidth_hz * self.spectral_efficiency(snr_db)
    }
}

/// Pre-fading SNR of a link in dB.
pub fn snr_db(budget: &LinkBudget, distance_m: f64, extra_loss_db: f64, noise_dbm: f64) -> Result<f64> {
    Ok(budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi
        - fspl(distance_m, budget.carrier_frequency_hz)?
        - extra_loss_db
        - noise_dbm)
}
