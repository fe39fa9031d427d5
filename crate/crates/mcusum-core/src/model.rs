//! Statistical model of the sensor network.
//!
//! Each sensor carries a nominal (pre-change) and an anomalous
//! (post-change) distribution. An anomaly placement is the sorted set of
//! `m` sensor indices currently affected; the canonical placement family
//! enumerates all such sets in lexicographic order. Observations are
//! sampled componentwise-independently and scored through per-sensor
//! log-likelihood ratios.
//!
//! Sensor indices are 0-based throughout this crate; external interfaces
//! (files, CLI) use 1-based indices and convert at the boundary.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::math::{standard_normal, uniform_f64};
use crate::{Error, Result, MAX_PLACEMENTS};

/// One observation vector, one value per sensor.
pub type ObservationVector = Vec<f64>;

/// A per-sensor marginal distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SensorDistribution {
    Gaussian { mean: f64, var: f64 },
    Bernoulli { p: f64 },
}

impl SensorDistribution {
    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        let d = Self::Gaussian { mean, var };
        d.validate()?;
        Ok(d)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        let d = Self::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { mean, var } => {
                if !mean.is_finite() || !var.is_finite() || var <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian requires finite mean and var > 0, got mean={mean}, var={var}"
                    )));
                }
            }
            Self::Bernoulli { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "bernoulli requires p strictly inside (0, 1), got p={p}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Bernoulli { .. } => "bernoulli",
        }
    }

    /// Log density (Gaussian) or log mass (Bernoulli); `-inf` off support.
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { mean, var } => {
                let d = x - mean;
                -0.5 * libm::log(core::f64::consts::TAU * var) - d * d / (2.0 * var)
            }
            Self::Bernoulli { p } => {
                if x == 1.0 {
                    libm::log(p)
                } else if x == 0.0 {
                    libm::log(1.0 - p)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Draws the kind's base variate: standard normal for Gaussian
    /// sensors, uniform on `[0,1)` for Bernoulli sensors.
    #[inline]
    pub fn draw_base<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { .. } => standard_normal(rng),
            Self::Bernoulli { .. } => uniform_f64(rng),
        }
    }

    /// Transforms a base variate into a sample of this distribution.
    ///
    /// Sharing one base variate between two same-kind distributions gives
    /// common-random-number coupled samples.
    #[inline]
    pub fn realize(&self, base: f64) -> f64 {
        match *self {
            Self::Gaussian { mean, var } => mean + libm::sqrt(var) * base,
            Self::Bernoulli { p } => {
                if base < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let base = self.draw_base(rng);
        self.realize(base)
    }
}

/// Closed-form KL divergence `D(p || q)` between two same-kind
/// distributions.
pub fn kl_divergence(p: &SensorDistribution, q: &SensorDistribution) -> Result<f64> {
    use SensorDistribution::*;
    match (*p, *q) {
        (Gaussian { mean: m1, var: v1 }, Gaussian { mean: m0, var: v0 }) => {
            Ok(0.5 * (libm::log(v0 / v1) + (v1 + (m1 - m0) * (m1 - m0)) / v0 - 1.0))
        }
        (Bernoulli { p: p1 }, Bernoulli { p: p0 }) => {
            Ok(p1 * libm::log(p1 / p0) + (1.0 - p1) * libm::log((1.0 - p1) / (1.0 - p0)))
        }
        _ => Err(Error::InvalidParameter(String::from(
            "KL divergence requires two distributions of the same kind",
        ))),
    }
}

/// The nominal/anomalous distribution pair of one sensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorModel {
    pre: SensorDistribution,
    post: SensorDistribution,
}

impl SensorModel {
    /// The pair must be same-kind (the likelihood ratio needs a common
    /// dominating measure) and the two distributions must differ.
    pub fn new(pre: SensorDistribution, post: SensorDistribution) -> Result<Self> {
        pre.validate()?;
        post.validate()?;
        if pre.kind_name() != post.kind_name() {
            return Err(Error::InvalidParameter(format!(
                "pre ({}) and post ({}) distributions must be of the same kind",
                pre.kind_name(),
                post.kind_name()
            )));
        }
        if pre == post {
            return Err(Error::InvalidParameter(String::from(
                "pre and post distributions must differ",
            )));
        }
        Ok(Self { pre, post })
    }

    pub fn pre(&self) -> &SensorDistribution {
        &self.pre
    }

    pub fn post(&self) -> &SensorDistribution {
        &self.post
    }

    #[inline]
    pub fn draw_base<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.pre.draw_base(rng)
    }

    /// Per-sensor log-likelihood ratio `log post(x) - log pre(x)`.
    ///
    /// NaN when both densities vanish at `x`; callers that sum these
    /// check finiteness and surface a domain error.
    #[inline]
    pub fn llr(&self, x: f64) -> f64 {
        self.post.log_density(x) - self.pre.log_density(x)
    }
}

/// An anomaly placement: a strictly increasing set of sensor indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Placement {
    indices: Vec<u32>,
}

impl Placement {
    /// Builds from 0-based indices; they must be strictly increasing.
    pub fn from_zero_based(indices: &[u32]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter(String::from(
                "placement must contain at least one sensor index",
            )));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(format!(
                "placement indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(Self {
            indices: indices.to_vec(),
        })
    }

    /// Builds from 1-based indices as used by external interfaces.
    pub fn from_one_based(indices: &[u32]) -> Result<Self> {
        if indices.iter().any(|&i| i == 0) {
            return Err(Error::InvalidParameter(String::from(
                "1-based placement indices must be >= 1",
            )));
        }
        let zero: Vec<u32> = indices.iter().map(|&i| i - 1).collect();
        Self::from_zero_based(&zero)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// 0-based indices, strictly increasing.
    pub fn zero_based(&self) -> &[u32] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<u32> {
        self.indices.iter().map(|&i| i + 1).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|&i| i as usize)
    }

    #[inline]
    pub fn contains(&self, sensor: usize) -> bool {
        self.indices.binary_search(&(sensor as u32)).is_ok()
    }

    /// Log-likelihood-ratio sum over the placement's sensors, indexing
    /// into a table of per-sensor values.
    #[inline]
    pub fn sum_over(&self, per_sensor: &[f64]) -> f64 {
        self.indices
            .iter()
            .map(|&i| per_sensor[i as usize])
            .sum()
    }
}

impl fmt::Display for Placement {
    /// Renders with 1-based indices, e.g. `[1,3]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (pos, idx) in self.indices.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", idx + 1)?;
        }
        write!(f, "]")
    }
}

/// Number of `m`-subsets of `l` items, `None` past [`MAX_PLACEMENTS`].
pub fn binomial_capped(l: usize, m: usize) -> Option<u64> {
    if m > l {
        return Some(0);
    }
    let m = m.min(l - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (l - i) as u128 / (i + 1) as u128;
        if acc > MAX_PLACEMENTS as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// The canonical family of all anomaly placements for a network:
/// every `m`-subset of the `l` sensors, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacementSet {
    num_sensors: usize,
    anomaly_size: usize,
    placements: Vec<Placement>,
}

/// Enumerates all `binomial(l, m)` placements in lexicographic order.
pub fn enumerate_placements(l: usize, m: usize) -> Result<PlacementSet> {
    if l < 1 || m < 1 || m > l {
        return Err(Error::InvalidParameter(format!(
            "placement enumeration requires 1 <= m <= L, got L={l}, m={m}"
        )));
    }
    let count = binomial_capped(l, m).ok_or(Error::PlacementSetTooLarge {
        num_sensors: l,
        anomaly_size: m,
    })?;

    let mut placements = Vec::with_capacity(count as usize);
    let mut current: Vec<u32> = (0..m as u32).collect();
    loop {
        placements.push(Placement {
            indices: current.clone(),
        });
        // Lexicographic successor: bump the rightmost index that can still
        // grow, then reset everything after it to consecutive values.
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(PlacementSet {
                    num_sensors: l,
                    anomaly_size: m,
                    placements,
                });
            }
            i -= 1;
            if current[i] < (l - m + i) as u32 {
                current[i] += 1;
                for j in i + 1..m {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

impl PlacementSet {
    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    pub fn anomaly_size(&self) -> usize {
        self.anomaly_size
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Placement> {
        self.placements.get(index)
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Placement> {
        self.placements.iter()
    }

    pub fn as_slice(&self) -> &[Placement] {
        &self.placements
    }

    /// Position of a placement in canonical order.
    pub fn index_of(&self, placement: &Placement) -> Option<usize> {
        self.placements.binary_search(placement).ok()
    }
}

impl<'a> IntoIterator for &'a PlacementSet {
    type Item = &'a Placement;
    type IntoIter = core::slice::Iter<'a, Placement>;

    fn into_iter(self) -> Self::IntoIter {
        self.placements.iter()
    }
}

/// The full network: per-sensor distribution pairs plus the anomaly size.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    sensors: Vec<SensorModel>,
    anomaly_size: usize,
}

impl NetworkModel {
    pub fn new(sensors: Vec<SensorModel>, anomaly_size: usize) -> Result<Self> {
        if sensors.is_empty() {
            return Err(Error::InvalidParameter(String::from(
                "network requires at least one sensor",
            )));
        }
        if anomaly_size < 1 || anomaly_size > sensors.len() {
            return Err(Error::InvalidParameter(format!(
                "anomaly size requires 1 <= m <= L, got m={anomaly_size}, L={}",
                sensors.len()
            )));
        }
        Ok(Self {
            sensors,
            anomaly_size,
        })
    }

    /// A network of `l` identical sensors.
    pub fn homogeneous(l: usize, sensor: SensorModel, anomaly_size: usize) -> Result<Self> {
        Self::new(vec![sensor; l], anomaly_size)
    }

    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn anomaly_size(&self) -> usize {
        self.anomaly_size
    }

    pub fn sensors(&self) -> &[SensorModel] {
        &self.sensors
    }

    pub fn sensor(&self, index: usize) -> &SensorModel {
        &self.sensors[index]
    }

    /// True when every sensor shares one nominal and one anomalous
    /// distribution.
    pub fn is_homogeneous(&self) -> bool {
        self.sensors.iter().all(|s| s == &self.sensors[0])
    }

    /// The canonical placement family for this network.
    pub fn placements(&self) -> Result<PlacementSet> {
        enumerate_placements(self.num_sensors(), self.anomaly_size)
    }

    /// Checks that a placement is a member of this network's family.
    pub fn validate_placement(&self, placement: &Placement) -> Result<()> {
        if placement.len() != self.anomaly_size {
            return Err(Error::InvalidParameter(format!(
                "placement has {} sensors but the anomaly size is {}",
                placement.len(),
                self.anomaly_size
            )));
        }
        let last = *placement.zero_based().last().expect("placement non-empty");
        if last as usize >= self.num_sensors() {
            return Err(Error::InvalidParameter(format!(
                "placement sensor index {} out of range for L={}",
                last + 1,
                self.num_sensors()
            )));
        }
        Ok(())
    }

    /// Fills `out` with one base variate per sensor.
    ///
    /// The draw order and count never depend on any placement, so the
    /// same RNG stream yields the same bases whatever the anomaly does.
    #[inline]
    pub fn draw_base_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.num_sensors());
        for (slot, sensor) in out.iter_mut().zip(&self.sensors) {
            *slot = sensor.draw_base(rng);
        }
    }

    /// Transforms base variates into an observation with the anomaly at
    /// `placement` (`None` for the no-anomaly regime).
    #[inline]
    pub fn realize_into(&self, base: &[f64], placement: Option<&Placement>, out: &mut [f64]) {
        assert_eq!(base.len(), self.num_sensors());
        assert_eq!(out.len(), self.num_sensors());
        for ((slot, sensor), &b) in out.iter_mut().zip(&self.sensors).zip(base) {
            *slot = sensor.pre.realize(b);
        }
        if let Some(p) = placement {
            for idx in p.iter() {
                out[idx] = self.sensors[idx].post.realize(base[idx]);
            }
        }
    }

    /// Samples one observation vector.
    pub fn sample_observation<R: RngCore + ?Sized>(
        &self,
        placement: Option<&Placement>,
        rng: &mut R,
    ) -> Result<ObservationVector> {
        if let Some(p) = placement {
            self.validate_placement(p)?;
        }
        let l = self.num_sensors();
        let mut base = vec![0.0; l];
        let mut obs = vec![0.0; l];
        self.draw_base_into(rng, &mut base);
        self.realize_into(&base, placement, &mut obs);
        Ok(obs)
    }

    /// Per-sensor log-likelihood ratios of an observation.
    pub fn per_sensor_llr_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.num_sensors() || out.len() != self.num_sensors() {
            return Err(Error::InvalidParameter(format!(
                "observation length {} does not match L={}",
                x.len(),
                self.num_sensors()
            )));
        }
        for ((slot, sensor), &xi) in out.iter_mut().zip(&self.sensors).zip(x) {
            let v = sensor.llr(xi);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "log-likelihood ratio is not finite at observation {xi}"
                )));
            }
            *slot = v;
        }
        Ok(())
    }

    /// Joint log-likelihood ratio of one observation under a fixed
    /// anomaly placement: the per-sensor ratios summed over the placement.
    pub fn placement_llr(&self, placement: &Placement, x: &[f64]) -> Result<f64> {
        self.validate_placement(placement)?;
        if x.len() != self.num_sensors() {
            return Err(Error::InvalidParameter(format!(
                "observation length {} does not match L={}",
                x.len(),
                self.num_sensors()
            )));
        }
        let mut total = 0.0;
        for idx in placement.iter() {
            let v = self.sensors[idx].llr(x[idx]);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "log-likelihood ratio is not finite at sensor {} (x={})",
                    idx + 1,
                    x[idx]
                )));
            }
            total += v;
        }
        Ok(total)
    }
}
