//! Per-placement drift estimation, the effective KL number, and the
//! search for the weight vector minimizing it.
//!
//! The drift of a placement `E` is the expected one-step mixture
//! log-likelihood ratio when observations carry the anomaly at `E`; the
//! KL number `I` is the weight-averaged drift, i.e. the KL divergence
//! between the randomized post-change mixture and the nominal joint
//! density. `I` is strictly convex in the weights, and at its minimizer
//! the drifts are equal across the support — that equalized slowest drift
//! is what makes the mixture test's worst-path delay optimal.
//!
//! All estimators share base randomness across placements (common random
//! numbers): each sample draws one base variate per sensor and realizes
//! it under both the nominal and the anomalous distribution, so drift
//! *differences* -- the gradient components -- are estimated with far less
//! variance than the drifts themselves.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::detectors::{MixtureScorer, WeightVector};
use crate::math::MeanAccumulator;
use crate::model::{NetworkModel, Placement, PlacementSet};
use crate::{Error, Result};

/// A Monte-Carlo point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl DriftEstimate {
    fn from_acc(acc: &MeanAccumulator) -> Self {
        Self {
            mean: acc.mean(),
            stderr: acc.stderr(),
        }
    }
}

/// Drift estimates for every placement of the canonical family, computed
/// from one common-random-number batch.
#[derive(Clone, Debug)]
pub struct DriftProfile {
    /// Per-placement drift, canonical order.
    pub drifts: Vec<DriftEstimate>,
    /// Paired differences `drift_i - drift_last` for `i < |E| - 1`; their
    /// standard errors come from the per-sample differences, so they are
    /// much tighter than combining the two marginal errors.
    pub diffs_vs_reference: Vec<DriftEstimate>,
    /// The weight-averaged per-sample statistic: an estimate of the KL
    /// number whose mean is exactly the weighted average of `drifts`.
    pub kl: DriftEstimate,
    pub n_samples: usize,
}

fn check_weights_len(weights: &WeightVector, placements: &PlacementSet) -> Result<()> {
    if weights.len() != placements.len() {
        return Err(Error::InvalidParameter(format!(
            "weight vector length {} does not match {} placements",
            weights.len(),
            placements.len()
        )));
    }
    Ok(())
}

fn check_sample_count(n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "estimation requires at least 2 samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Estimates the drift of every placement from one shared batch of base
/// variates.
pub fn estimate_drift_profile<R: RngCore + ?Sized>(
    model: &NetworkModel,
    placements: &PlacementSet,
    weights: &WeightVector,
    n_samples: usize,
    rng: &mut R,
) -> Result<DriftProfile> {
    check_weights_len(weights, placements)?;
    check_sample_count(n_samples)?;
    let l = model.num_sensors();
    let k = placements.len();
    let scorer = MixtureScorer::new(weights);

    let mut base = vec![0.0; l];
    let mut llr_pre = vec![0.0; l];
    let mut llr_post = vec![0.0; l];
    let mut values = vec![0.0; k];

    let mut drift_acc = vec![MeanAccumulator::default(); k];
    let mut diff_acc = vec![MeanAccumulator::default(); k.saturating_sub(1)];
    let mut kl_acc = MeanAccumulator::default();

    for _ in 0..n_samples {
        model.draw_base_into(rng, &mut base);
        for (idx, sensor) in model.sensors().iter().enumerate() {
            let x_pre = sensor.pre().realize(base[idx]);
            let x_post = sensor.post().realize(base[idx]);
            let v_pre = sensor.llr(x_pre);
            let v_post = sensor.llr(x_post);
            if !v_pre.is_finite() || !v_post.is_finite() {
                return Err(Error::Domain(format!(
                    "log-likelihood ratio is not finite at sensor {}",
                    idx + 1
                )));
            }
            llr_pre[idx] = v_pre;
            llr_post[idx] = v_post;
        }
        let mut weighted = 0.0;
        for (i, active) in placements.iter().enumerate() {
            let v = scorer.mixture_llr_pre_post(placements, &llr_pre, &llr_post, active)?;
            values[i] = v;
            drift_acc[i].push(v);
            weighted += weights.get(i) * v;
        }
        kl_acc.push(weighted);
        let reference = values[k - 1];
        for i in 0..k - 1 {
            diff_acc[i].push(values[i] - reference);
        }
    }

    Ok(DriftProfile {
        drifts: drift_acc.iter().map(DriftEstimate::from_acc).collect(),
        diffs_vs_reference: diff_acc.iter().map(DriftEstimate::from_acc).collect(),
        kl: DriftEstimate::from_acc(&kl_acc),
        n_samples,
    })
}

/// Estimates the drift of a single placement: the sample mean of the
/// mixture log-likelihood ratio over observations carrying the anomaly at
/// `placement`.
pub fn estimate_drift<R: RngCore + ?Sized>(
    model: &NetworkModel,
    weights: &WeightVector,
    placement: &Placement,
    n_samples: usize,
    rng: &mut R,
) -> Result<DriftEstimate> {
    model.validate_placement(placement)?;
    check_sample_count(n_samples)?;
    let placements = model.placements()?;
    check_weights_len(weights, &placements)?;
    let scorer = MixtureScorer::new(weights);

    let l = model.num_sensors();
    let mut base = vec![0.0; l];
    let mut obs = vec![0.0; l];
    let mut llrs = vec![0.0; l];
    let mut acc = MeanAccumulator::default();
    for _ in 0..n_samples {
        model.draw_base_into(rng, &mut base);
        model.realize_into(&base, Some(placement), &mut obs);
        model.per_sensor_llr_into(&obs, &mut llrs)?;
        acc.push(scorer.mixture_llr(&placements, &llrs)?);
    }
    Ok(DriftEstimate::from_acc(&acc))
}

/// Estimates the KL number: placements are drawn from `weights`, the
/// observation from the drawn placement, and the mixture log-likelihood
/// ratio is averaged.
///
/// Each sample consumes one uniform (placement choice) plus one base
/// variate per sensor, independent of the placement drawn, so replaying a
/// seed against slightly different weights pairs the samples.
pub fn estimate_kl_number<R: RngCore + ?Sized>(
    model: &NetworkModel,
    weights: &WeightVector,
    n_samples: usize,
    rng: &mut R,
) -> Result<DriftEstimate> {
    check_sample_count(n_samples)?;
    let placements = model.placements()?;
    check_weights_len(weights, &placements)?;
    let scorer = MixtureScorer::new(weights);
    let cumulative = cumulative_weights(weights);

    let l = model.num_sensors();
    let mut base = vec![0.0; l];
    let mut obs = vec![0.0; l];
    let mut llrs = vec![0.0; l];
    let mut acc = MeanAccumulator::default();
    for _ in 0..n_samples {
        let u = crate::math::uniform_f64(rng);
        let idx = pick_index(&cumulative, u);
        let placement = placements.get(idx).expect("index within family");
        model.draw_base_into(rng, &mut base);
        model.realize_into(&base, Some(placement), &mut obs);
        model.per_sensor_llr_into(&obs, &mut llrs)?;
        acc.push(scorer.mixture_llr(&placements, &llrs)?);
    }
    Ok(DriftEstimate::from_acc(&acc))
}

pub(crate) fn cumulative_weights(weights: &WeightVector) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut total = 0.0;
    for &w in weights.as_slice() {
        total += w;
        cumulative.push(total);
    }
    cumulative
}

pub(crate) fn pick_index(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

/// Monte-Carlo gradient of the KL number over the reduced simplex
/// coordinates (all placements except the last canonical one, which
/// absorbs the remaining mass).
#[derive(Clone, Debug)]
pub struct GradientEstimate {
    /// Component `i` is `drift(E_i) - drift(E_last)`.
    pub components: Vec<f64>,
    /// Standard errors of the paired differences.
    pub stderrs: Vec<f64>,
}

/// Estimates the reduced-coordinate gradient: each component is the drift
/// difference between a placement and the last canonical placement,
/// computed with common random numbers.
pub fn estimate_gradient<R: RngCore + ?Sized>(
    model: &NetworkModel,
    weights: &WeightVector,
    n_samples: usize,
    rng: &mut R,
) -> Result<GradientEstimate> {
    let placements = model.placements()?;
    let profile = estimate_drift_profile(model, &placements, weights, n_samples, rng)?;
    Ok(GradientEstimate {
        components: profile.diffs_vs_reference.iter().map(|d| d.mean).collect(),
        stderrs: profile
            .diffs_vs_reference
            .iter()
            .map(|d| d.stderr)
            .collect(),
    })
}

/// Configuration of the projected-gradient weight search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Initial step size; halved when a paired fresh KL estimate stops
    /// decreasing.
    pub step_size: f64,
    pub max_iters: usize,
    /// Monte-Carlo batch size per gradient evaluation.
    pub samples_per_gradient: usize,
    /// Convergence threshold on a smoothed projected-gradient norm.
    pub convergence_tol: f64,
    /// Weights above this are counted as support members.
    pub support_epsilon: f64,
    /// Seed of the optimizer's own random streams; the whole trajectory
    /// is reproducible from it.
    pub seed: u64,
    /// Batch size of the final drift report.
    pub report_samples: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            max_iters: 400,
            samples_per_gradient: 10_000,
            convergence_tol: 0.005,
            support_epsilon: 1e-4,
            seed: 0,
            report_samples: 200_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0)
            || self.max_iters == 0
            || self.samples_per_gradient < 2
            || !(self.convergence_tol > 0.0)
            || !(self.support_epsilon > 0.0)
            || self.report_samples < 2
        {
            return Err(Error::InvalidParameter(String::from(
                "optimizer configuration fields must all be positive",
            )));
        }
        Ok(())
    }
}

/// Per-placement drift report at a given weight vector.
#[derive(Clone, Debug)]
pub struct DriftReport {
    pub entries: Vec<DriftEntry>,
    /// Estimated KL number; exactly the weight-averaged entry drifts.
    pub kl_number: f64,
    pub kl_stderr: f64,
    pub support_epsilon: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug)]
pub struct DriftEntry {
    pub placement: Placement,
    pub weight: f64,
    pub drift: f64,
    pub stderr: f64,
    pub in_support: bool,
}

impl DriftReport {
    pub fn support(&self) -> impl Iterator<Item = &DriftEntry> {
        self.entries.iter().filter(|e| e.in_support)
    }

    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|e| e.in_support).count()
    }
}

/// Computes a [`DriftReport`] for arbitrary weights.
pub fn drift_report<R: RngCore + ?Sized>(
    model: &NetworkModel,
    weights: &WeightVector,
    n_samples: usize,
    support_epsilon: f64,
    rng: &mut R,
) -> Result<DriftReport> {
    let placements = model.placements()?;
    let profile = estimate_drift_profile(model, &placements, weights, n_samples, rng)?;
    Ok(report_from_profile(
        &placements,
        weights,
        &profile,
        support_epsilon,
    ))
}

fn report_from_profile(
    placements: &PlacementSet,
    weights: &WeightVector,
    profile: &DriftProfile,
    support_epsilon: f64,
) -> DriftReport {
    let entries = placements
        .iter()
        .zip(&profile.drifts)
        .enumerate()
        .map(|(i, (placement, est))| DriftEntry {
            placement: placement.clone(),
            weight: weights.get(i),
            drift: est.mean,
            stderr: est.stderr,
            in_support: weights.get(i) > support_epsilon,
        })
        .collect();
    DriftReport {
        entries,
        kl_number: profile.kl.mean,
        kl_stderr: profile.kl.stderr,
        support_epsilon,
        n_samples: profile.n_samples,
    }
}

/// Result of [`optimize_weights`].
#[derive(Clone, Debug)]
pub struct Optimized {
    pub weights: WeightVector,
    pub report: DriftReport,
    /// False when the iteration budget ran out before the smoothed
    /// projected-gradient norm fell below tolerance; the best iterate
    /// seen is still returned.
    pub converged: bool,
    pub iterations: usize,
}

// Distinct ChaCha streams of the optimizer's seed.
const STREAM_GRADIENT_BASE: u64 = 1;
const STREAM_CHECK_BASE: u64 = 1 << 32;
const STREAM_FINAL_COMPARE: u64 = 1 << 33;
const STREAM_REPORT: u64 = (1 << 33) + 1;

// Paired-improvement check cadence and the step-size floor.
const CHECK_PERIOD: usize = 10;
const MIN_STEP_FACTOR: f64 = 1.0 / 256.0;
// Smoothing factor of the projected-gradient norm estimate.
const PG_EMA: f64 = 0.2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Euclidean projection onto `{x : x >= 0, sum(x) <= 1}`.
///
/// If clipping negatives already satisfies the sum constraint that is the
/// projection; otherwise the equality face is active and the sorted-
/// threshold simplex projection applies.
fn project_sub_simplex(v: &mut [f64]) {
    let clipped_sum: f64 = v.iter().map(|x| x.max(0.0)).sum();
    if clipped_sum <= 1.0 {
        for x in v.iter_mut() {
            *x = x.max(0.0);
        }
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - threshold).max(0.0);
    }
}

fn weights_from_reduced(beta: &[f64]) -> Result<WeightVector> {
    let mut w = Vec::with_capacity(beta.len() + 1);
    w.extend_from_slice(beta);
    let used: f64 = beta.iter().sum();
    w.push((1.0 - used).max(0.0));
    WeightVector::new(w)
}

/// Finds the weight vector minimizing the KL number by projected gradient
/// descent over the reduced simplex coordinates, starting from uniform
/// weights.
///
/// The gradient of each iteration is a fresh common-random-number batch;
/// every [`CHECK_PERIOD`] iterations a paired fresh KL estimate compares
/// the current iterate with the previous checkpoint and halves the step
/// on non-decrease. Non-convergence within the budget returns the best
/// checkpoint iterate with `converged = false` rather than failing.
pub fn optimize_weights(model: &NetworkModel, config: &OptimizerConfig) -> Result<Optimized> {
    config.validate()?;
    let placements = model.placements()?;
    let k = placements.len();

    if k == 1 {
        let weights = WeightVector::uniform(1)?;
        let mut rng = stream_rng(config.seed, STREAM_REPORT);
        let profile = estimate_drift_profile(
            model,
            &placements,
            &weights,
            config.report_samples,
            &mut rng,
        )?;
        let report = report_from_profile(&placements, &weights, &profile, config.support_epsilon);
        return Ok(Optimized {
            weights,
            report,
            converged: true,
            iterations: 0,
        });
    }

    let mut beta = vec![1.0 / k as f64; k - 1];
    let mut step = config.step_size;
    let mut smoothed_pg: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut checkpoint = beta.clone();
    let mut best: Option<(Vec<f64>, f64)> = None;

    let paired_kl = |beta: &[f64], stream: u64| -> Result<f64> {
        let weights = weights_from_reduced(beta)?;
        let mut rng = stream_rng(config.seed, stream);
        let profile = estimate_drift_profile(
            model,
            &placements,
            &weights,
            config.samples_per_gradient,
            &mut rng,
        )?;
        Ok(profile.kl.mean)
    };

    for iter in 1..=config.max_iters {
        iterations = iter;
        let weights = weights_from_reduced(&beta)?;
        let mut rng = stream_rng(config.seed, STREAM_GRADIENT_BASE + iter as u64);
        let profile = estimate_drift_profile(
            model,
            &placements,
            &weights,
            config.samples_per_gradient,
            &mut rng,
        )?;

        let mut next = beta.clone();
        for (x, diff) in next.iter_mut().zip(&profile.diffs_vs_reference) {
            *x -= step * diff.mean;
        }
        project_sub_simplex(&mut next);

        let moved: f64 = beta
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        // The raw squared norm carries the gradient estimator's sampling
        // variance as a positive bias; subtracting it estimates the true
        // projected-gradient norm instead of the Monte-Carlo noise floor.
        let noise_sq: f64 = profile
            .diffs_vs_reference
            .iter()
            .map(|d| d.stderr * d.stderr)
            .sum();
        let pg_norm = libm::sqrt((moved / (step * step) - noise_sq).max(0.0));
        let smoothed = match smoothed_pg {
            None => pg_norm,
            Some(prev) => (1.0 - PG_EMA) * prev + PG_EMA * pg_norm,
        };
        smoothed_pg = Some(smoothed);
        beta = next;

        if smoothed < config.convergence_tol {
            converged = true;
            break;
        }

        if iter % CHECK_PERIOD == 0 {
            // Same stream for both evaluations: identical base draws, so
            // the comparison is paired and its noise mostly cancels.
            let stream = STREAM_CHECK_BASE + iter as u64;
            let kl_now = paired_kl(&beta, stream)?;
            let kl_prev = paired_kl(&checkpoint, stream)?;
            if best.as_ref().map_or(true, |(_, kl)| kl_now < *kl) {
                best = Some((beta.clone(), kl_now));
            }
            if kl_now >= kl_prev {
                step = (step * 0.5).max(config.step_size * MIN_STEP_FACTOR);
            }
            checkpoint = beta.clone();
        }
    }

    if !converged {
        if let Some((best_beta, _)) = best {
            // Paired comparison decides between the last iterate and the
            // best checkpoint.
            let kl_last = paired_kl(&beta, STREAM_FINAL_COMPARE)?;
            let kl_best = paired_kl(&best_beta, STREAM_FINAL_COMPARE)?;
            if kl_best < kl_last {
                beta = best_beta;
            }
        }
    }

    let weights = weights_from_reduced(&beta)?;
    let mut rng = stream_rng(config.seed, STREAM_REPORT);
    let profile = estimate_drift_profile(
        model,
        &placements,
        &weights,
        config.report_samples,
        &mut rng,
    )?;
    let report = report_from_profile(&placements, &weights, &profile, config.support_epsilon);
    Ok(Optimized {
        weights,
        report,
        converged,
        iterations,
    })
}

/// Structured outcome of the equal-drift optimality conditions at a
/// candidate minimizer. All conditions are reported, none throw.
#[derive(Clone, Copy, Debug)]
pub struct OptimalityCheck {
    pub support_size: usize,
    /// Full support required for `m = 1`; at least two members otherwise.
    pub support_ok: bool,
    /// Largest pairwise drift gap across the support.
    pub max_support_drift_gap: f64,
    pub equal_drifts_ok: bool,
    /// Smallest `drift(off-support) - common support drift`; infinite
    /// when the support is full.
    pub min_off_support_margin: f64,
    pub off_support_ok: bool,
    /// `|common support drift - KL number|`.
    pub kl_gap: f64,
    pub kl_consistent_ok: bool,
    pub tol: f64,
}

impl OptimalityCheck {
    pub fn all_ok(&self) -> bool {
        self.support_ok && self.equal_drifts_ok && self.off_support_ok && self.kl_consistent_ok
    }
}

/// Checks the minimizer structure of a drift report: correct support
/// size, equal drifts on the support, strictly larger drifts off it, and
/// agreement of the common drift with the KL number, all within `tol`.
pub fn verify_optimality(
    model: &NetworkModel,
    report: &DriftReport,
    tol: f64,
) -> OptimalityCheck {
    let support: Vec<&DriftEntry> = report.entries.iter().filter(|e| e.in_support).collect();
    let support_size = support.len();
    let support_ok = if model.anomaly_size() == 1 {
        support_size == report.entries.len() && support_size >= 1
    } else {
        support_size >= 2
    };

    if support.is_empty() {
        return OptimalityCheck {
            support_size,
            support_ok: false,
            max_support_drift_gap: f64::INFINITY,
            equal_drifts_ok: false,
            min_off_support_margin: f64::NEG_INFINITY,
            off_support_ok: false,
            kl_gap: f64::INFINITY,
            kl_consistent_ok: false,
            tol,
        };
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut weighted = 0.0;
    let mut mass = 0.0;
    for e in &support {
        lo = lo.min(e.drift);
        hi = hi.max(e.drift);
        weighted += e.weight * e.drift;
        mass += e.weight;
    }
    let common = weighted / mass;
    let max_support_drift_gap = hi - lo;
    let equal_drifts_ok = max_support_drift_gap <= tol;

    let mut min_off_support_margin = f64::INFINITY;
    for e in report.entries.iter().filter(|e| !e.in_support) {
        min_off_support_margin = min_off_support_margin.min(e.drift - common);
    }
    let off_support_ok = min_off_support_margin > -tol;

    let kl_gap = (common - report.kl_number).abs();
    let kl_consistent_ok = kl_gap <= tol;

    OptimalityCheck {
        support_size,
        support_ok,
        max_support_drift_gap,
        equal_drifts_ok,
        min_off_support_margin,
        off_support_ok,
        kl_gap,
        kl_consistent_ok,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SensorDistribution, SensorModel};

    fn gauss_sensor(post_mean: f64) -> SensorModel {
        SensorModel::new(
            SensorDistribution::gaussian(0.0, 1.0).unwrap(),
            SensorDistribution::gaussian(post_mean, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn single_sensor_model() -> NetworkModel {
        NetworkModel::homogeneous(1, gauss_sensor(1.0), 1).unwrap()
    }

    #[test]
    fn single_sensor_drift_is_kl() {
        // Degenerate mixture: drift = D(f || g) = 1/2.
        let model = single_sensor_model();
        let w = WeightVector::uniform(1).unwrap();
        let p = model.placements().unwrap().get(0).unwrap().clone();
        let mut rng = stream_rng(9, 0);
        let d = estimate_drift(&model, &w, &p, 100_000, &mut rng).unwrap();
        assert!((d.mean - 0.5).abs() < 3.0 * d.stderr);

        let mut rng = stream_rng(10, 0);
        let kl = estimate_kl_number(&model, &w, 100_000, &mut rng).unwrap();
        assert!((kl.mean - 0.5).abs() < 3.0 * kl.stderr);
    }

    #[test]
    fn profile_kl_is_weighted_drift_average() {
        let model = NetworkModel::homogeneous(3, gauss_sensor(1.0), 1).unwrap();
        let placements = model.placements().unwrap();
        let w = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let mut rng = stream_rng(4, 0);
        let profile = estimate_drift_profile(&model, &placements, &w, 20_000, &mut rng).unwrap();
        let avg: f64 = profile
            .drifts
            .iter()
            .enumerate()
            .map(|(i, d)| w.get(i) * d.mean)
            .sum();
        assert!((profile.kl.mean - avg).abs() < 1e-12);
    }

    #[test]
    fn two_routes_to_kl_number_agree() {
        let model = NetworkModel::homogeneous(3, gauss_sensor(1.0), 2).unwrap();
        let placements = model.placements().unwrap();
        let w = WeightVector::new(vec![0.6, 0.1, 0.3]).unwrap();
        let mut rng = stream_rng(12, 0);
        let profile = estimate_drift_profile(&model, &placements, &w, 200_000, &mut rng).unwrap();
        let mut rng = stream_rng(13, 0);
        let direct = estimate_kl_number(&model, &w, 200_000, &mut rng).unwrap();
        let combined = (profile.kl.stderr.powi(2) + direct.stderr.powi(2)).sqrt();
        assert!(
            (profile.kl.mean - direct.mean).abs() < 3.0 * combined,
            "profile {} vs direct {} (3se = {})",
            profile.kl.mean,
            direct.mean,
            3.0 * combined
        );
    }

    #[test]
    fn gradient_is_empty_for_single_placement() {
        let model = single_sensor_model();
        let w = WeightVector::uniform(1).unwrap();
        let mut rng = stream_rng(2, 0);
        let g = estimate_gradient(&model, &w, 1_000, &mut rng).unwrap();
        assert!(g.components.is_empty());
    }

    #[test]
    fn gradient_vanishes_on_homogeneous_uniform() {
        let model = NetworkModel::homogeneous(4, gauss_sensor(1.0), 1).unwrap();
        let w = WeightVector::uniform(4).unwrap();
        let mut rng = stream_rng(3, 0);
        let g = estimate_gradient(&model, &w, 200_000, &mut rng).unwrap();
        for (c, se) in g.components.iter().zip(&g.stderrs) {
            assert!(c.abs() < 3.0 * se, "component {c} exceeds 3se {se}");
        }
    }

    #[test]
    fn gradient_sign_for_strong_first_sensor() {
        // Sensor 1 much stronger than sensor 2: at uniform weights the
        // drift under placement [1] exceeds the reference drift.
        let sensors = vec![gauss_sensor(2.0), gauss_sensor(0.5)];
        let model = NetworkModel::new(sensors, 1).unwrap();
        let w = WeightVector::uniform(2).unwrap();
        let mut rng = stream_rng(5, 0);
        let g = estimate_gradient(&model, &w, 200_000, &mut rng).unwrap();
        assert!(g.components[0] > 3.0 * g.stderrs[0]);
    }

    #[test]
    fn projection_cases() {
        let mut v = vec![0.2, 0.3];
        project_sub_simplex(&mut v);
        assert_eq!(v, vec![0.2, 0.3]);

        let mut v = vec![-0.5, 0.4];
        project_sub_simplex(&mut v);
        assert_eq!(v, vec![0.0, 0.4]);

        let mut v = vec![1.0, 1.0];
        project_sub_simplex(&mut v);
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);

        let mut v = vec![2.0, 0.0];
        project_sub_simplex(&mut v);
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn pick_index_boundaries() {
        let w = WeightVector::new(vec![0.25, 0.25, 0.5]).unwrap();
        let cumulative = cumulative_weights(&w);
        assert_eq!(pick_index(&cumulative, 0.0), 0);
        assert_eq!(pick_index(&cumulative, 0.249), 0);
        assert_eq!(pick_index(&cumulative, 0.25), 1);
        assert_eq!(pick_index(&cumulative, 0.999), 2);
    }

    #[test]
    fn optimality_check_rejects_corner_point() {
        // Point mass on the first of two placements with m = 1: support
        // is not full, so the check must fail.
        let model = NetworkModel::new(vec![gauss_sensor(2.0), gauss_sensor(0.5)], 1).unwrap();
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let mut rng = stream_rng(6, 0);
        let report = drift_report(&model, &w, 10_000, 1e-4, &mut rng).unwrap();
        let check = verify_optimality(&model, &report, 0.05);
        assert!(!check.support_ok);
        assert!(!check.all_ok());
    }

    #[test]
    fn estimators_reject_bad_arguments() {
        let model = single_sensor_model();
        let w = WeightVector::uniform(1).unwrap();
        let p = model.placements().unwrap().get(0).unwrap().clone();
        let mut rng = stream_rng(1, 0);
        assert!(estimate_drift(&model, &w, &p, 1, &mut rng).is_err());
        let w2 = WeightVector::uniform(2).unwrap();
        assert!(estimate_kl_number(&model, &w2, 100, &mut rng).is_err());
    }
}
