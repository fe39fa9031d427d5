//! The three sequential detectors, as incremental state machines.
//!
//! All statistics are kept in the log domain and compared against a log
//! threshold `b`, so thresholds corresponding to very large false-alarm
//! budgets never overflow.
//!
//! - Mixture CUSUM: driven by the log of a placement-weighted mixture of
//!   likelihood ratios; its recursion `s <- max(s, 0) + z` reproduces the
//!   direct form `max over start times i of sum_{j=i..k} z_j`.
//! - Naive CUSUM: sums the ratios of *all* sensors and re-centres with
//!   `(L - m) D(f || g)`; defined for homogeneous networks only.
//! - Oracle CUSUM: uses the true anomaly placement at each step.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math::LogSumExp;
use crate::model::{kl_divergence, NetworkModel, Placement, PlacementSet};
use crate::{Error, Result};

/// Absolute tolerance on the sum of a weight vector.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A probability vector over the canonical placement family.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    /// Entries must be finite and non-negative and sum to 1 within
    /// [`WEIGHT_SUM_TOL`]; the length must match the placement family the
    /// vector will be used with.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(String::from(
                "weight vector must be non-empty",
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(String::from(
                "weights must be finite and non-negative",
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1 within {WEIGHT_SUM_TOL:e}, got sum={sum}"
            )));
        }
        Ok(Self { weights })
    }

    /// The uniform vector of length `n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(String::from(
                "weight vector must be non-empty",
            )));
        }
        Ok(Self {
            weights: alloc::vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, index: usize) -> f64 {
        self.weights[index]
    }
}

/// The running statistic of one detector.
///
/// `log_stat` is the log-domain statistic value after `steps` updates; a
/// fresh state has `log_stat = 0`, which for the mixture CUSUM yields the
/// same trajectory from the first update on as the textbook zero start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorState {
    log_stat: f64,
    steps: u64,
}

impl DetectorState {
    pub fn new() -> Self {
        Self {
            log_stat: 0.0,
            steps: 0,
        }
    }

    pub fn log_stat(&self) -> f64 {
        self.log_stat
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

impl Default for DetectorState {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of a threshold check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoppingDecision {
    stopped: bool,
    stop_time: Option<u64>,
}

impl StoppingDecision {
    pub fn stopped(&self) -> bool {
        self.stopped
    }

    /// The step index at which the detector stopped, present iff stopped.
    pub fn stop_time(&self) -> Option<u64> {
        self.stop_time
    }
}

/// Precomputed log-weights for repeated mixture-ratio evaluations.
#[derive(Clone, Debug)]
pub struct MixtureScorer {
    log_weights: Vec<f64>,
}

impl MixtureScorer {
    pub fn new(weights: &WeightVector) -> Self {
        Self {
            log_weights: weights
                .as_slice()
                .iter()
                .map(|&w| if w > 0.0 { libm::log(w) } else { f64::NEG_INFINITY })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// One-step mixture log-likelihood ratio from a table of per-sensor
    /// ratios: `log sum_E w_E exp(sum of ratios over E)`, evaluated with a
    /// max-shifted log-sum-exp.
    pub fn mixture_llr(&self, placements: &PlacementSet, sensor_llrs: &[f64]) -> Result<f64> {
        if self.log_weights.len() != placements.len() {
            return Err(Error::InvalidParameter(format!(
                "weight vector length {} does not match {} placements",
                self.log_weights.len(),
                placements.len()
            )));
        }
        let mut lse = LogSumExp::new();
        for (placement, &lw) in placements.iter().zip(&self.log_weights) {
            if lw == f64::NEG_INFINITY {
                continue;
            }
            lse.add(lw + placement.sum_over(sensor_llrs));
        }
        let v = lse.value();
        if !v.is_finite() {
            return Err(Error::Domain(String::from(
                "mixture likelihood ratio has no effective weight mass",
            )));
        }
        Ok(v)
    }

    /// Mixture log-likelihood ratio when the observation was generated
    /// with the anomaly at `active`, given separate per-sensor ratio
    /// tables for nominal and anomalous realizations of shared base
    /// variates. Used for common-random-number drift estimation.
    pub fn mixture_llr_pre_post(
        &self,
        placements: &PlacementSet,
        llr_pre: &[f64],
        llr_post: &[f64],
        active: &Placement,
    ) -> Result<f64> {
        if self.log_weights.len() != placements.len() {
            return Err(Error::InvalidParameter(format!(
                "weight vector length {} does not match {} placements",
                self.log_weights.len(),
                placements.len()
            )));
        }
        let mut lse = LogSumExp::new();
        for (placement, &lw) in placements.iter().zip(&self.log_weights) {
            if lw == f64::NEG_INFINITY {
                continue;
            }
            let mut s = lw;
            for idx in placement.iter() {
                s += if active.contains(idx) {
                    llr_post[idx]
                } else {
                    llr_pre[idx]
                };
            }
            lse.add(s);
        }
        let v = lse.value();
        if !v.is_finite() {
            return Err(Error::Domain(String::from(
                "mixture likelihood ratio has no effective weight mass",
            )));
        }
        Ok(v)
    }
}

/// One-step mixture log-likelihood ratio of an observation.
///
/// Convenience wrapper over [`MixtureScorer`] that enumerates the
/// placement family on each call; hot loops should build the scorer once.
pub fn mixture_llr(model: &NetworkModel, weights: &WeightVector, x: &[f64]) -> Result<f64> {
    let placements = model.placements()?;
    if weights.len() != placements.len() {
        return Err(Error::InvalidParameter(format!(
            "weight vector length {} does not match {} placements",
            weights.len(),
            placements.len()
        )));
    }
    let mut llrs = alloc::vec![0.0; model.num_sensors()];
    model.per_sensor_llr_into(x, &mut llrs)?;
    MixtureScorer::new(weights).mixture_llr(&placements, &llrs)
}

/// Mixture-CUSUM update in the log domain: `s <- max(s, 0) + z` where `z`
/// is the current one-step mixture log-likelihood ratio.
#[inline]
pub fn mcusum_update(state: DetectorState, z: f64) -> DetectorState {
    DetectorState {
        log_stat: state.log_stat.max(0.0) + z,
        steps: state.steps + 1,
    }
}

/// Naive-CUSUM update: add the all-sensor ratio sum plus the re-centring
/// correction, then rectify at zero.
#[inline]
pub fn ncusum_update(state: DetectorState, sum_all_llr: f64, correction: f64) -> DetectorState {
    DetectorState {
        log_stat: (state.log_stat + sum_all_llr + correction).max(0.0),
        steps: state.steps + 1,
    }
}

/// The naive detector's re-centring constant `(L - m) D(f || g)`.
///
/// Defined for homogeneous networks only; the constant makes the expected
/// one-step increment `-m D(f||g)` before the change and `+m D(f||g)`
/// after it.
pub fn ncusum_correction(model: &NetworkModel) -> Result<f64> {
    if !model.is_homogeneous() {
        return Err(Error::HeterogeneousModel);
    }
    let sensor = model.sensor(0);
    let kl = kl_divergence(sensor.post(), sensor.pre())?;
    Ok((model.num_sensors() - model.anomaly_size()) as f64 * kl)
}

/// Oracle-CUSUM update: uses the true anomaly placement at this step.
pub fn ocusum_update(
    state: DetectorState,
    model: &NetworkModel,
    true_placement: &Placement,
    x: &[f64],
) -> Result<DetectorState> {
    let z = model.placement_llr(true_placement, x)?;
    Ok(DetectorState {
        log_stat: (state.log_stat + z).max(0.0),
        steps: state.steps + 1,
    })
}

/// Threshold check: stopped at the first update where the log statistic
/// reaches `threshold_b` (inclusive). A state with no updates never stops;
/// stopping times start at 1.
pub fn check_stop(state: &DetectorState, threshold_b: f64) -> StoppingDecision {
    if state.steps >= 1 && state.log_stat >= threshold_b {
        StoppingDecision {
            stopped: true,
            stop_time: Some(state.steps),
        }
    } else {
        StoppingDecision {
            stopped: false,
            stop_time: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_placements, SensorDistribution, SensorModel};

    fn gauss_model(l: usize, m: usize) -> NetworkModel {
        let sensor = SensorModel::new(
            SensorDistribution::gaussian(0.0, 1.0).unwrap(),
            SensorDistribution::gaussian(1.0, 1.0).unwrap(),
        )
        .unwrap();
        NetworkModel::homogeneous(l, sensor, m).unwrap()
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(alloc::vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(alloc::vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(alloc::vec![-0.1, 1.1]).is_err());
        assert!(WeightVector::new(alloc::vec![]).is_err());
        let u = WeightVector::uniform(4).unwrap();
        assert_eq!(u.as_slice(), &[0.25; 4]);
    }

    #[test]
    fn mixture_llr_uniform_symmetric_point() {
        // Two sensors, uniform weights, both observations at the
        // per-sensor zero-llr point: log(0.5 e^0 + 0.5 e^0) = 0.
        let model = gauss_model(2, 1);
        let w = WeightVector::uniform(2).unwrap();
        let v = mixture_llr(&model, &w, &[0.5, 0.5]).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn mixture_llr_degenerate_cases() {
        // Single placement: reduces to the placement llr.
        let model = gauss_model(1, 1);
        let w = WeightVector::uniform(1).unwrap();
        assert!((mixture_llr(&model, &w, &[1.5]).unwrap() - 1.0).abs() < 1e-12);

        // Point mass on the first placement: second sensor is ignored.
        let model = gauss_model(2, 1);
        let w = WeightVector::new(alloc::vec![1.0, 0.0]).unwrap();
        assert!((mixture_llr(&model, &w, &[1.5, -7.3]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_llr_rejects_length_mismatch() {
        let model = gauss_model(3, 1);
        let w = WeightVector::uniform(2).unwrap();
        assert!(mixture_llr(&model, &w, &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn mcusum_update_examples() {
        let s = DetectorState {
            log_stat: -0.3,
            steps: 1,
        };
        assert!((mcusum_update(s, 0.2).log_stat() - 0.2).abs() < 1e-15);
        let s = DetectorState {
            log_stat: 0.5,
            steps: 1,
        };
        assert!((mcusum_update(s, -0.1).log_stat() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn mcusum_matches_direct_form() {
        // Recursive statistic equals max over start indices of suffix sums.
        let zs = [0.4, -0.2, 0.3];
        let mut state = DetectorState::new();
        for &z in &zs {
            state = mcusum_update(state, z);
        }
        let direct = (0..zs.len())
            .map(|i| zs[i..].iter().sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((direct - 0.5).abs() < 1e-12);
        assert!((state.log_stat() - direct).abs() < 1e-12);
    }

    #[test]
    fn mcusum_floor_guarantees_last_increment() {
        let mut state = DetectorState::new();
        for &z in &[-3.0, -1.5, 0.2, -0.7] {
            state = mcusum_update(state, z);
            assert!(state.log_stat() >= z);
        }
    }

    #[test]
    fn ncusum_update_examples() {
        // L=2, m=1 homogeneous N(0,1)/N(1,1): correction = 0.5.
        let model = gauss_model(2, 1);
        let corr = ncusum_correction(&model).unwrap();
        assert!((corr - 0.5).abs() < 1e-12);

        // x = (0,0): per-sensor llrs are -0.5 each; (0 - 1 + 0.5)+ = 0.
        let s = ncusum_update(DetectorState::new(), -1.0, corr);
        assert_eq!(s.log_stat(), 0.0);

        // state 1.0, x = (1.5, 0.5): sum llr = 1.0; 1.0 + 1.0 + 0.5 = 2.5.
        let s = ncusum_update(
            DetectorState {
                log_stat: 1.0,
                steps: 3,
            },
            1.0,
            corr,
        );
        assert!((s.log_stat() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn ncusum_correction_rejects_heterogeneous() {
        let s1 = SensorModel::new(
            SensorDistribution::gaussian(0.0, 1.0).unwrap(),
            SensorDistribution::gaussian(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let s2 = SensorModel::new(
            SensorDistribution::gaussian(0.0, 1.0).unwrap(),
            SensorDistribution::gaussian(2.0, 1.0).unwrap(),
        )
        .unwrap();
        let model = NetworkModel::new(alloc::vec![s1, s2], 1).unwrap();
        assert_eq!(ncusum_correction(&model), Err(Error::HeterogeneousModel));
    }

    #[test]
    fn ocusum_update_examples() {
        let model = gauss_model(1, 1);
        let p = enumerate_placements(1, 1).unwrap().get(0).unwrap().clone();
        let s = ocusum_update(DetectorState::new(), &model, &p, &[0.5]).unwrap();
        assert_eq!(s.log_stat(), 0.0);
        let s = ocusum_update(
            DetectorState {
                log_stat: 0.3,
                steps: 2,
            },
            &model,
            &p,
            &[1.5],
        )
        .unwrap();
        assert!((s.log_stat() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn rectified_statistics_stay_nonnegative() {
        let model = gauss_model(2, 1);
        let corr = ncusum_correction(&model).unwrap();
        let p = enumerate_placements(2, 1).unwrap().get(0).unwrap().clone();
        let mut n = DetectorState::new();
        let mut o = DetectorState::new();
        for x in [[-4.0, -4.0], [0.1, -0.3], [-2.0, 5.0], [-8.0, -8.0]] {
            let mut llrs = [0.0; 2];
            model.per_sensor_llr_into(&x, &mut llrs).unwrap();
            n = ncusum_update(n, llrs.iter().sum(), corr);
            o = ocusum_update(o, &model, &p, &x).unwrap();
            assert!(n.log_stat() >= 0.0);
            assert!(o.log_stat() >= 0.0);
        }
    }

    #[test]
    fn check_stop_boundary_inclusive() {
        let s = DetectorState {
            log_stat: 0.9,
            steps: 4,
        };
        assert!(!check_stop(&s, 1.0).stopped());
        let s = DetectorState {
            log_stat: 1.0,
            steps: 4,
        };
        let d = check_stop(&s, 1.0);
        assert!(d.stopped());
        assert_eq!(d.stop_time(), Some(4));
    }

    #[test]
    fn check_stop_needs_at_least_one_update() {
        // Stopping times start at 1: a fresh state never stops, but a
        // zero-increment first update can when the threshold is <= 0.
        let fresh = DetectorState::new();
        assert!(!check_stop(&fresh, -1.0).stopped());
        let s = mcusum_update(fresh, 0.0);
        let d = check_stop(&s, -1.0);
        assert!(d.stopped());
        assert_eq!(d.stop_time(), Some(1));
    }
}
