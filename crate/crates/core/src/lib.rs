//! Monte Carlo stochastic-geometry simulator for non-terrestrial networks.
//!
//! Four studies share one geometry and channel engine: UAV ad-hoc routing
//! latency, cell-free energy efficiency, HAPS-relayed satellite coverage and
//! HAPS-based integrated access and backhaul.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod scenario;

pub use error::{Error, Result};
