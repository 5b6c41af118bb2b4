//! Link-budget evaluation shared by every scenario.

pub mod antenna;
pub mod blockage;
pub mod capacity;
pub mod fading;
pub mod radio;

use std::f64::consts::PI;

pub use antenna::{antenna_gain, Antenna, AntennaPattern};
pub use blockage::{sample_los_state, Blockage, BlockageModel, LinkGeometry, LosState};
pub use capacity::{average_capacity, CapacityEstimate, ErgodicCapacity};
pub use fading::{sample_fading_power, FadingModel, FadingSampler};
pub use radio::{BandKind, RadioParams, RadioTable};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Free-space path loss `20 log10(4 pi d f / c)` in dB.
pub fn fspl(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::domain(format!("path loss needs a positive distance, got {distance_m}")));
    }
    if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
        return Err(Error::domain(format!("path loss needs a positive frequency, got {frequency_hz}")));
    }
    Ok(fspl_unchecked(distance_m, frequency_hz))
}

#[inline]
pub(crate) fn fspl_unchecked(distance_m: f64, frequency_hz: f64) -> f64 {
    20.0 * (4.0 * PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10()
}

/// Thermal noise over `bandwidth_hz` in dBm.
pub fn noise_power_dbm(noise_psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    noise_psd_dbm_hz + 10.0 * bandwidth_hz.log10()
}

/// Fixed part of a point-to-point link: powers, gains and carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub carrier_frequency_hz: f64,
}

impl LinkBudget {
    pub fn new(tx_power_dbm: f64, tx_gain_dbi: f64, rx_gain_dbi: f64, carrier_frequency_hz: f64) -> Self {
        LinkBudget {
            tx_power_dbm,
            tx_gain_dbi,
            rx_gain_dbi,
            carrier_frequency_hz,
        }
    }

    /// Received power without fading or blockage.
    pub fn rx_dbm(&self, distance_m: f64) -> Result<f64> {
        Ok(self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi - fspl(distance_m, self.carrier_frequency_hz)?)
    }

    /// Evaluate one link realization.
    pub fn sample(&self, distance_m: f64, los_state: LosState, blockage: &Blockage, fading_power: f64) -> Result<LinkSample> {
        if !(fading_power >= 0.0) {
            return Err(Error::domain(format!("fading power must be non-negative, got {fading_power}")));
        }
        let path_loss_db = fspl(distance_m, self.carrier_frequency_hz)?;
        let blockage_loss_db = blockage.penalty_db(los_state);
        let rx_power_dbm = self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi - path_loss_db - blockage_loss_db
            + linear_to_db(fading_power);
        Ok(LinkSample {
            distance_m,
            los_state,
            path_loss_db,
            blockage_loss_db,
            fading_power,
            rx_power_dbm,
        })
    }
}

/// One realized link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub distance_m: f64,
    pub los_state: LosState,
    pub path_loss_db: f64,
    pub blockage_loss_db: f64,
    pub fading_power: f64,
    pub rx_power_dbm: f64,
}

/// Linear SINR from powers in mW.
#[inline]
pub fn sinr_linear(signal_mw: f64, interference_mw: f64, noise_mw: f64) -> f64 {
    signal_mw / (interference_mw + noise_mw)
}

/// SINR of `serving` against co-channel `interferers` and receiver noise, in dB.
pub fn sinr(serving: &LinkSample, interferers: &[LinkSample], radio: &RadioParams) -> Result<f64> {
    if serving.rx_power_dbm.is_nan() {
        return Err(Error::domain("serving link has no received power"));
    }
    let interference: f64 = interferers.iter().map(|l| dbm_to_mw(l.rx_power_dbm)).sum();
    let noise = dbm_to_mw(radio.noise_dbm());
    Ok(linear_to_db(sinr_linear(dbm_to_mw(serving.rx_power_dbm), interference, noise)))
}

/// Shannon capacity `B log2(1 + sinr)` in bit/s.
pub fn shannon_capacity(bandwidth_hz: f64, sinr_db: f64) -> f64 {
    bandwidth_hz * (1.0 + db_to_linear(sinr_db)).log2()
}

/// Blockage and fading that apply to a link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub blockage: Blockage,
    pub fading: FadingModel,
}
