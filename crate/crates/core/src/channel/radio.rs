//! The shared radio-parameter table.
//!
//! Field names follow the rows of the simulation-parameter table so every
//! number can be traced back by name. Slash-separated rows become arrays in
//! the same order.

use serde::{Deserialize, Serialize};

use super::antenna::AntennaPattern;
use super::fading::FadingModel;
use crate::error::{Error, Result};
use crate::geometry::PlatformKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    Rf,
    MmWave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioTable {
    /// user / UAV / HAPS / satellite
    pub altitude_user_uav_haps_satellite_km: [f64; 4],
    pub antenna_gain_user_uav_haps_satellite_dbi: [f64; 4],
    pub transmit_power_user_uav_haps_satellite_dbm: [f64; 4],
    /// RF / mmWave
    pub carrier_frequency_rf_mmwave_ghz: [f64; 2],
    pub bandwidth_rf_mmwave_mhz: [f64; 2],
    /// (omega, b0, m)
    pub shadowed_rician_fading_shape: [f64; 3],
    pub nakagami_m_fading_shape: f64,
    pub cosine_antenna_pattern_elements: u32,
    pub noise_power_dbm_per_hz: f64,
    pub packet_size_mbits: f64,
}

impl Default for RadioTable {
    fn default() -> Self {
        RadioTable {
            altitude_user_uav_haps_satellite_km: [0.0, 0.05, 20.0, 550.0],
            antenna_gain_user_uav_haps_satellite_dbi: [3.0, 10.0, 30.0, 50.0],
            transmit_power_user_uav_haps_satellite_dbm: [20.0, 30.0, 36.0, 45.0],
            carrier_frequency_rf_mmwave_ghz: [2.0, 28.0],
            bandwidth_rf_mmwave_mhz: [40.0, 100.0],
            shadowed_rician_fading_shape: [1.29, 0.158, 19.4],
            nakagami_m_fading_shape: 2.0,
            cosine_antenna_pattern_elements: 32,
            noise_power_dbm_per_hz: -174.0,
            packet_size_mbits: 5.0,
        }
    }
}

/// Transmit-side view of one platform on one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
}

impl RadioParams {
    pub fn noise_dbm(&self) -> f64 {
        super::noise_power_dbm(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    pub fn tx_power_watts(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }
}

fn slot(kind: PlatformKind) -> usize {
    match kind {
        PlatformKind::User => 0,
        PlatformKind::Uav => 1,
        // the macro base station is HAPS-grade
        PlatformKind::Haps | PlatformKind::Mbs => 2,
        PlatformKind::Satellite => 3,
    }
}

impl RadioTable {
    pub fn altitude_m(&self, kind: PlatformKind) -> f64 {
        self.altitude_user_uav_haps_satellite_km[slot(kind)] * 1e3
    }

    pub fn gain_dbi(&self, kind: PlatformKind) -> f64 {
        self.antenna_gain_user_uav_haps_satellite_dbi[slot(kind)]
    }

    pub fn tx_power_dbm(&self, kind: PlatformKind) -> f64 {
        self.transmit_power_user_uav_haps_satellite_dbm[slot(kind)]
    }

    pub fn carrier_hz(&self, band: BandKind) -> f64 {
        match band {
            BandKind::Rf => self.carrier_frequency_rf_mmwave_ghz[0] * 1e9,
            BandKind::MmWave => self.carrier_frequency_rf_mmwave_ghz[1] * 1e9,
        }
    }

    pub fn bandwidth_hz(&self, band: BandKind) -> f64 {
        match band {
            BandKind::Rf => self.bandwidth_rf_mmwave_mhz[0] * 1e6,
            BandKind::MmWave => self.bandwidth_rf_mmwave_mhz[1] * 1e6,
        }
    }

    pub fn noise_dbm(&self, band: BandKind) -> f64 {
        super::noise_power_dbm(self.noise_power_dbm_per_hz, self.bandwidth_hz(band))
    }

    pub fn params(&self, kind: PlatformKind, band: BandKind) -> RadioParams {
        RadioParams {
            tx_power_dbm: self.tx_power_dbm(kind),
            antenna_gain_dbi: self.gain_dbi(kind),
            carrier_frequency_hz: self.carrier_hz(band),
            bandwidth_hz: self.bandwidth_hz(band),
            noise_psd_dbm_hz: self.noise_power_dbm_per_hz,
        }
    }

    pub fn nakagami(&self) -> FadingModel {
        FadingModel::Nakagami {
            m: self.nakagami_m_fading_shape,
        }
    }

    pub fn shadowed_rician(&self) -> FadingModel {
        let [omega, b0, m] = self.shadowed_rician_fading_shape;
        FadingModel::ShadowedRician { omega, b0, m }
    }

    pub fn cosine_pattern(&self) -> AntennaPattern {
        AntennaPattern::CosineArray {
            n_elements: self.cosine_antenna_pattern_elements,
        }
    }

    pub fn packet_size_bits(&self) -> f64 {
        self.packet_size_mbits * 1e6
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = self
            .altitude_user_uav_haps_satellite_km
            .iter()
            .chain(&self.antenna_gain_user_uav_haps_satellite_dbi)
            .chain(&self.transmit_power_user_uav_haps_satellite_dbm)
            .chain(&self.carrier_frequency_rf_mmwave_ghz)
            .chain(&self.bandwidth_rf_mmwave_mhz)
            .chain(&self.shadowed_rician_fading_shape)
            .chain([&self.nakagami_m_fading_shape, &self.noise_power_dbm_per_hz, &self.packet_size_mbits])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::config("radio", "all radio-table values must be finite"));
        }
        if self.altitude_user_uav_haps_satellite_km.iter().any(|&h| h < 0.0) {
            return Err(Error::config("radio.altitude_user_uav_haps_satellite_km", "altitudes must be >= 0"));
        }
        if self.carrier_frequency_rf_mmwave_ghz.iter().any(|&f| f <= 0.0) {
            return Err(Error::config("radio.carrier_frequency_rf_mmwave_ghz", "frequencies must be > 0"));
        }
        if self.bandwidth_rf_mmwave_mhz.iter().any(|&b| b <= 0.0) {
            return Err(Error::config("radio.bandwidth_rf_mmwave_mhz", "bandwidths must be > 0"));
        }
        if self.packet_size_mbits <= 0.0 {
            return Err(Error::config("radio.packet_size_mbits", "packet size must be > 0"));
        }
        if self.cosine_antenna_pattern_elements == 0 {
            return Err(Error::config("radio.cosine_antenna_pattern_elements", "need at least one element"));
        }
        self.nakagami()
            .validate()
            .map_err(|e| Error::config("radio.nakagami_m_fading_shape", e.to_string()))?;
        self.shadowed_rician()
            .validate()
            .map_err(|e| Error::config("radio.shadowed_rician_fading_shape", e.to_string()))?;
        Ok(())
    }
}
