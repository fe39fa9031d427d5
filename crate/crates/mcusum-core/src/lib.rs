//! Quickest detection of a moving anomaly in a sensor network.
//!
//! A network of `L` sensors produces one observation per sensor per time
//! step. After an unknown changepoint an anomaly occupies a set of `m`
//! sensors and may move to a different set at every step; affected sensors
//! emit data from their anomalous distribution instead of their nominal
//! one. This crate provides the pieces needed to detect that change
//! quickly at a controlled false-alarm rate:
//!
//! - [`model`]: per-sensor distributions, anomaly placements, observation
//!   sampling and log-likelihood ratios;
//! - [`detectors`]: the mixture-CUSUM statistic together with the naive
//!   and oracle CUSUM baselines, as incremental state machines;
//! - [`weights`]: Monte-Carlo estimation of per-placement drifts and the
//!   effective KL number, and the projected-gradient search for the
//!   weight vector minimizing it;
//! - [`trajectory`]: anomaly path policies (fixed, i.i.d. random, cyclic,
//!   worst-drift) used when evaluating detection delay.
//!
//! The crate is `no_std` (with `alloc`); sampling is generic over
//! [`rand_core::RngCore`]. Simulation harnesses, file formats and the CLI
//! live in the companion `mcusum` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

use alloc::string::String;
use core::fmt;

pub mod detectors;
pub mod math;
pub mod model;
pub mod trajectory;
pub mod weights;

/// Largest number of anomaly placements that will be materialized.
///
/// Mixture likelihood ratios are linear in the placement count, so
/// anything past this is unusable anyway; failing early beats crawling.
pub const MAX_PLACEMENTS: u64 = 1_000_000;

/// Errors produced by model construction and statistic evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented constraint.
    InvalidParameter(String),
    /// The placement family for (L, m) exceeds [`MAX_PLACEMENTS`].
    PlacementSetTooLarge { num_sensors: usize, anomaly_size: usize },
    /// A likelihood-ratio evaluation left the log domain (zero density).
    Domain(String),
    /// The operation is only defined for homogeneous networks.
    HeterogeneousModel,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::PlacementSetTooLarge {
                num_sensors,
                anomaly_size,
            } => write!(
                f,
                "placement family for L={num_sensors}, m={anomaly_size} exceeds \
                 the cap of {MAX_PLACEMENTS} placements"
            ),
            Self::Domain(msg) => write!(f, "domain error: {msg}"),
            Self::HeterogeneousModel => {
                write!(f, "operation requires a homogeneous sensor network")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
