//! Anomaly trajectory policies.
//!
//! A policy decides which placement the anomaly occupies at each step of
//! a post-change trajectory. The worst deterministic path cannot be
//! searched directly, so the worst-drift policy approximates it with the
//! static placement whose estimated drift under the detector's weights is
//! smallest — accurate in the large false-alarm-budget regime where the
//! slowest drift dominates the delay.

use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::detectors::WeightVector;
use crate::math::uniform_f64;
use crate::model::{NetworkModel, Placement, PlacementSet};
use crate::weights::{cumulative_weights, estimate_drift_profile, pick_index, DriftEstimate};
use crate::{Error, Result};

/// How the anomaly moves after the changepoint.
#[derive(Clone, Debug, PartialEq)]
pub enum TrajectoryPolicy {
    /// The anomaly stays at one placement.
    Fixed(Placement),
    /// Placement redrawn independently at every step from the given
    /// weights over the canonical family.
    IidRandom(WeightVector),
    /// Deterministic cycle through the listed placements.
    Cyclic(Vec<Placement>),
    /// Static placement with the worst (smallest) estimated drift under
    /// the given detector weights.
    WorstDrift(WeightVector),
}

impl TrajectoryPolicy {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Fixed(_) => "fixed",
            Self::IidRandom(_) => "iid_random",
            Self::Cyclic(_) => "cyclic",
            Self::WorstDrift(_) => "worst_drift",
        }
    }

    /// Validates the policy against a model and resolves it into a
    /// sampler. The worst-drift policy estimates all placement drifts
    /// here (with `drift_samples` draws from `rng`) and freezes the
    /// minimizer.
    pub fn resolve<R: RngCore + ?Sized>(
        &self,
        model: &NetworkModel,
        drift_samples: usize,
        rng: &mut R,
    ) -> Result<PolicySampler> {
        match self {
            Self::Fixed(placement) => {
                model.validate_placement(placement)?;
                Ok(PolicySampler {
                    kind: ResolvedKind::Fixed(placement.clone()),
                })
            }
            Self::Cyclic(order) => {
                if order.is_empty() {
                    return Err(Error::InvalidParameter(String::from(
                        "cyclic policy requires at least one placement",
                    )));
                }
                for p in order {
                    model.validate_placement(p)?;
                }
                Ok(PolicySampler {
                    kind: ResolvedKind::Cyclic(order.clone()),
                })
            }
            Self::IidRandom(weights) => {
                let placements = model.placements()?;
                if weights.len() != placements.len() {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "policy weight vector length {} does not match {} placements",
                        weights.len(),
                        placements.len()
                    )));
                }
                let cumulative = cumulative_weights(weights);
                Ok(PolicySampler {
                    kind: ResolvedKind::Iid {
                        placements,
                        cumulative,
                    },
                })
            }
            Self::WorstDrift(detector_weights) => {
                let (placement, _) =
                    worst_drift_placement(model, detector_weights, drift_samples, rng)?;
                Ok(PolicySampler {
                    kind: ResolvedKind::Fixed(placement),
                })
            }
        }
    }
}

/// A resolved, validated policy ready to emit placements.
#[derive(Clone, Debug)]
pub struct PolicySampler {
    kind: ResolvedKind,
}

#[derive(Clone, Debug)]
enum ResolvedKind {
    Fixed(Placement),
    Iid {
        placements: PlacementSet,
        cumulative: Vec<f64>,
    },
    Cyclic(Vec<Placement>),
}

impl PolicySampler {
    /// The anomaly placement at step `k >= 1`.
    ///
    /// Fixed policies ignore both arguments, cyclic policies index with
    /// period `len`, and i.i.d. policies consume one uniform draw.
    pub fn next_placement<R: RngCore + ?Sized>(&self, k: u64, rng: &mut R) -> &Placement {
        debug_assert!(k >= 1, "trajectory steps are 1-based");
        match &self.kind {
            ResolvedKind::Fixed(p) => p,
            ResolvedKind::Cyclic(order) => {
                let idx = ((k - 1) % order.len() as u64) as usize;
                &order[idx]
            }
            ResolvedKind::Iid {
                placements,
                cumulative,
            } => {
                let u = uniform_f64(rng);
                let idx = pick_index(cumulative, u);
                placements.get(idx).expect("index within family")
            }
        }
    }

    /// True when the policy consumes randomness per step.
    pub fn is_random(&self) -> bool {
        matches!(self.kind, ResolvedKind::Iid { .. })
    }
}

/// The placement with the smallest estimated drift under the detector's
/// weights, with its drift. Ties break to the lexicographically first
/// placement; the estimate is deterministic given the RNG state.
pub fn worst_drift_placement<R: RngCore + ?Sized>(
    model: &NetworkModel,
    detector_weights: &WeightVector,
    n_samples: usize,
    rng: &mut R,
) -> Result<(Placement, DriftEstimate)> {
    let placements = model.placements()?;
    let profile = estimate_drift_profile(model, &placements, detector_weights, n_samples, rng)?;
    let mut best_idx = 0;
    for (i, d) in profile.drifts.iter().enumerate() {
        if d.mean < profile.drifts[best_idx].mean {
            best_idx = i;
        }
    }
    Ok((
        placements.get(best_idx).expect("family non-empty").clone(),
        profile.drifts[best_idx],
    ))
}
