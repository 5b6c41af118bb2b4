//! Line-of-sight state models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosState {
    Los,
    /// Obstructed line of sight (foliage).
    Olos,
    Nlos,
}

impl LosState {
    pub fn is_los(self) -> bool {
        self == LosState::Los
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LosState::Los => "los",
            LosState::Olos => "olos",
            LosState::Nlos => "nlos",
        }
    }
}

/// What a blockage model needs to know about a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BlockageModel {
    AlwaysLos,
    /// `P(LoS) = exp(-beta * d_km)`; the blocked state is OLoS.
    ExpDistance { beta_per_km: f64 },
    /// `P(LoS) = 1 / (1 + a * exp(-b * (theta_deg - a)))`; the blocked state is NLoS.
    ElevationSigmoid { a: f64, b: f64 },
}

impl BlockageModel {
    pub fn los_probability(&self, geometry: &LinkGeometry) -> f64 {
        match *self {
            BlockageModel::AlwaysLos => 1.0,
            BlockageModel::ExpDistance { beta_per_km } => (-beta_per_km * geometry.distance_m / 1e3).exp().min(1.0),
            BlockageModel::ElevationSigmoid { a, b } => 1.0 / (1.0 + a * (-b * (geometry.elevation_deg - a)).exp()),
        }
    }

    pub fn blocked_state(&self) -> LosState {
        match self {
            BlockageModel::ExpDistance { .. } => LosState::Olos,
            _ => LosState::Nlos,
        }
    }

    /// State implied by a uniform draw `u` in `[0, 1)`; LoS iff `u < P(LoS)`.
    ///
    /// Exposed so callers can share one uniform across correlated evaluations.
    pub fn state_from_uniform(&self, geometry: &LinkGeometry, u: f64) -> LosState {
        if u < self.los_probability(geometry) {
            LosState::Los
        } else {
            self.blocked_state()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BlockageModel::AlwaysLos => Ok(()),
            BlockageModel::ExpDistance { beta_per_km } => {
                if !(beta_per_km >= 0.0) || !beta_per_km.is_finite() {
                    return Err(Error::config("beta_per_km", format!("must be non-negative, got {beta_per_km}")));
                }
                Ok(())
            }
            BlockageModel::ElevationSigmoid { a, b } => {
                if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::config(
                        "elevation_sigmoid",
                        format!("environment constants must be non-negative, got a={a}, b={b}"),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Blockage model plus the excess loss applied to non-LoS states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blockage {
    pub model: BlockageModel,
    pub excess_loss_db: f64,
}

impl Blockage {
    pub const fn always_los() -> Self {
        Blockage {
            model: BlockageModel::AlwaysLos,
            excess_loss_db: 0.0,
        }
    }

    pub fn penalty_db(&self, state: LosState) -> f64 {
        if state.is_los() {
            0.0
        } else {
            self.excess_loss_db
        }
    }

    /// Linear mean of the received-power factor over the LoS/blocked mixture.
    pub fn mean_power_factor(&self, geometry: &LinkGeometry) -> f64 {
        let p = self.model.los_probability(geometry);
        p + (1.0 - p) * 10f64.powf(-self.excess_loss_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.excess_loss_db >= 0.0) || !self.excess_loss_db.is_finite() {
            return Err(Error::config(
                "excess_loss_db",
                format!("must be non-negative, got {}", self.excess_loss_db),
            ));
        }
        Ok(())
    }
}

pub fn sample_los_state<R: Rng + ?Sized>(model: &BlockageModel, geometry: &LinkGeometry, rng: &mut R) -> LosState {
    model.state_from_uniform(geometry, rng.random::<f64>())
}
