//! Small numeric helpers shared across the crate.

use rand_core::RngCore;

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn uniform_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw via Box-Muller.
///
/// Consumes exactly two RNG words per draw regardless of the value
/// produced, so replaying a seed replays the same base randomness no
/// matter how the draws are later transformed. That property is what
/// makes common-random-number pairing across anomaly placements exact.
#[inline]
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - uniform_f64(rng); // (0, 1]
    let u2 = uniform_f64(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Streaming log-sum-exp accumulator.
///
/// Single pass, constant memory, shift-by-running-max; never exponentiates
/// a positive argument, so it cannot overflow for finite inputs.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl LogSumExp {
    #[inline]
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    /// Adds one term `v` (interpreted as `exp(v)`); `-inf` terms are no-ops.
    #[inline]
    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.scaled_sum += libm::exp(v - self.max);
        } else {
            self.scaled_sum = self.scaled_sum * libm::exp(self.max - v) + 1.0;
            self.max = v;
        }
    }

    /// `log(sum of exp(terms))`; `-inf` if no finite term was added.
    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + libm::log(self.scaled_sum)
        }
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

/// Running mean and standard error from plain first/second moments.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanAccumulator {
    sum: f64,
    sum_sq: f64,
    count: u64,
}

impl MeanAccumulator {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Standard error of the mean; 0 when fewer than two samples.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        libm::sqrt(var.max(0.0) / n)
    }
}
