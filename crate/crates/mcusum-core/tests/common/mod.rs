//! Shared test oracles, independent of the library's estimation paths.

use mcusum_core::detectors::WeightVector;
use mcusum_core::model::{NetworkModel, SensorDistribution, SensorModel};

pub fn gauss_sensor(post_mean: f64) -> SensorModel {
    SensorModel::new(
        SensorDistribution::gaussian(0.0, 1.0).unwrap(),
        SensorDistribution::gaussian(post_mean, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn homogeneous_model(l: usize, post_mean: f64, m: usize) -> NetworkModel {
    NetworkModel::homogeneous(l, gauss_sensor(post_mean), m).unwrap()
}

/// Gauss-Hermite nodes and weights: `integral f(x) exp(-x^2) dx ~=
/// sum w_i f(x_i)`. Newton iteration on the recurrence-evaluated Hermite
/// polynomials with the usual asymptotic initial guesses.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const EPS: f64 = 3e-14;
    const PI_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = (n + 1) / 2;
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut derivative = 0.0;
        for _ in 0..200 {
            let mut p1 = PI_NEG_QUARTER;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            derivative = (2.0 * nf).sqrt() * p2;
            let previous = z;
            z = previous - p1 / derivative;
            if (z - previous).abs() <= EPS {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (derivative * derivative);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// Expected value of `f` under a product of unit-variance Gaussians with
/// the given means, by tensor Gauss-Hermite quadrature.
pub fn gauss_expectation_2d<F: Fn(f64, f64) -> f64>(
    means: (f64, f64),
    nodes_per_axis: usize,
    f: F,
) -> f64 {
    let (nodes, weights) = gauss_hermite(nodes_per_axis);
    let scale = core::f64::consts::SQRT_2;
    let norm = core::f64::consts::PI;
    let mut total = 0.0;
    for (zi, wi) in nodes.iter().zip(&weights) {
        let x1 = means.0 + scale * zi;
        for (zj, wj) in nodes.iter().zip(&weights) {
            let x2 = means.1 + scale * zj;
            total += wi * wj * f(x1, x2);
        }
    }
    total / norm
}

/// Mixture log-likelihood ratio computed from raw densities, bypassing
/// the library's scorer. Only for small, well-conditioned test cases.
pub fn naive_mixture_llr(model: &NetworkModel, weights: &WeightVector, x: &[f64]) -> f64 {
    let placements = model.placements().unwrap();
    let mut ratio = 0.0;
    for (i, placement) in placements.iter().enumerate() {
        let mut log_ratio = 0.0;
        for idx in placement.iter() {
            let sensor = model.sensor(idx);
            log_ratio += sensor.post().log_density(x[idx]) - sensor.pre().log_density(x[idx]);
        }
        ratio += weights.get(i) * log_ratio.exp();
    }
    ratio.ln()
}

/// Mixture log-likelihood ratio from a per-sensor ratio table via a
/// two-pass max-shifted sum, written separately from the library's
/// streaming accumulator.
pub fn naive_mixture_llr_from_llrs(
    placements: &mcusum_core::model::PlacementSet,
    weights: &WeightVector,
    llrs: &[f64],
) -> f64 {
    let terms: Vec<f64> = placements
        .iter()
        .zip(weights.as_slice())
        .filter(|(_, &w)| w > 0.0)
        .map(|(p, &w)| w.ln() + p.iter().map(|i| llrs[i]).sum::<f64>())
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
