//! Seedable, splittable random streams and the scalar samplers built on them.
//!
//! A [`RandomStream`] is a ChaCha8 keystream keyed by a 64-bit seed and
//! positioned on one of 2^64 independent streams. Workers in a parallel run
//! each own one stream (`stream_id` = worker index), so a run is reproducible
//! for a fixed `(seed, workers)` pair regardless of thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{invalid, Result};

/// Poisson means below this use sequential inversion; above it the
/// transformed-rejection sampler from `rand_distr`.
const POISSON_INVERSION_LIMIT: f64 = 10.0;

/// If the conditioning event `{K >= l}` has at least this probability, the
/// conditional Poisson sampler simply rejects unconditional draws.
const CONDITIONAL_REJECTION_THRESHOLD: f64 = 0.25;

/// Reproducible random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw strictly inside (0, 1).
    ///
    /// Uses the top 53 bits of a 64-bit word and centres them in their cell,
    /// so the result is `(k + 1/2) / 2^53` and never hits either endpoint.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Draw from Poisson(`mean`).
    pub fn sample_poisson(&mut self, mean: f64) -> Result<u64> {
        if !mean.is_finite() || mean < 0.0 {
            return Err(invalid("mean", mean, "Poisson mean must be finite and >= 0"));
        }
        Ok(self.poisson_unchecked(mean))
    }

    #[inline]
    pub(crate) fn poisson_unchecked(&mut self, mean: f64) -> u64 {
        if mean == 0.0 {
            0
        } else if mean < POISSON_INVERSION_LIMIT {
            let p0 = (-mean).exp();
            self.poisson_inversion_from(0, p0, mean)
        } else {
            // Construction only fails for non-positive or non-finite means.
            let dist = Poisson::new(mean).expect("validated Poisson mean");
            dist.sample(&mut self.rng) as u64
        }
    }

    /// Draw from Poisson(`mean`) conditioned on `K >= l`.
    ///
    /// For small means the draw is a single sequential inversion of the
    /// truncated pmf starting at `k = l`, which stays exact when the
    /// conditioning event is rare. `l = 0` is the unconditioned sampler.
    pub fn sample_poisson_at_least(&mut self, mean: f64, l: u64) -> Result<u64> {
        if l == 0 {
            return self.sample_poisson(mean);
        }
        if !mean.is_finite() || mean <= 0.0 {
            return Err(invalid(
                "mean",
                mean,
                "conditional Poisson mean must be finite and > 0",
            ));
        }
        let tail = poisson_upper_tail(mean, l);
        if tail >= CONDITIONAL_REJECTION_THRESHOLD {
            loop {
                let k = self.poisson_unchecked(mean);
                if k >= l {
                    return Ok(k);
                }
            }
        }
        let p_l = poisson_pmf(mean, l);
        if tail <= 0.0 || p_l <= 0.0 {
            return Err(invalid(
                "mean",
                mean,
                "conditioning event probability underflows",
            ));
        }
        // Invert on the unnormalised scale: u ~ Unif(0, P(K >= l)).
        let u = self.next_uniform() * tail;
        let mut k = l;
        let mut p = p_l;
        let mut cum = p;
        while u > cum {
            k += 1;
            p *= mean / k as f64;
            if p == 0.0 {
                break;
            }
            cum += p;
        }
        Ok(k)
    }

    /// Random truncation level with `P(tau > m) = rho^m`, so `tau >= 1` and
    /// `P(tau >= m) = rho^(m-1)` for every `m >= 1`.
    pub fn sample_truncation_level(&mut self, rho: f64) -> Result<u32> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("rho", rho, "must lie in (0, 1)"));
        }
        Ok(self.truncation_level_unchecked(rho))
    }

    #[inline]
    pub(crate) fn truncation_level_unchecked(&mut self, rho: f64) -> u32 {
        // P(tau > m) = P(U < rho^m) = P(ln U / ln rho > m).
        let m = (self.next_uniform().ln() / rho.ln()).floor();
        (m as u32).saturating_add(1)
    }

    /// Sequential inversion of Poisson(`mean`) starting from `k0` with
    /// `p0 = P(K = k0)`. The uniform is drawn on the full probability scale.
    fn poisson_inversion_from(&mut self, k0: u64, p0: f64, mean: f64) -> u64 {
        let u = self.next_uniform();
        let mut k = k0;
        let mut p = p0;
        let mut cum = p;
        while u > cum {
            k += 1;
            p *= mean / k as f64;
            if p == 0.0 {
                break;
            }
            cum += p;
        }
        k
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `P(K = k)` for `K ~ Poisson(mean)`, evaluated in log space.
pub fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * mean.ln() - mean - statrs::function::gamma::ln_gamma(kf + 1.0)).exp()
}

/// `P(K >= l)` for `K ~ Poisson(mean)`.
///
/// Sums the upper tail directly when `mean <= l`, where `1 - P(K < l)` would
/// cancel catastrophically; otherwise complements the (short) lower sum.
pub fn poisson_upper_tail(mean: f64, l: u64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    if mean <= l as f64 {
        let mut term = poisson_pmf(mean, l);
        let mut sum = 0.0;
        let mut k = l;
        while term > sum * 1e-18 {
            sum += term;
            k += 1;
            term *= mean / k as f64;
            if term == 0.0 {
                break;
            }
        }
        sum
    } else {
        let mut term = (-mean).exp();
        let mut lower = 0.0;
        for k in 0..l {
            if k > 0 {
                term *= mean / k as f64;
            }
            lower += term;
        }
        (1.0 - lower).max(0.0)
    }
}
