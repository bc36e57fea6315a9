//! Independent references: closed-form Brownian supremum probabilities, an
//! exact-path crude simulator for the shipped model family, and the truncated
//! Poisson pmf.

use crate::error::{invalid, Error, Result};
use crate::estimator::{Branch, EstimatorParams, SampleRecord};
use crate::model::HeavyTailModel;
use crate::rng::{poisson_pmf, poisson_upper_tail, RandomStream};

/// `P(sup_{s <= t} σB(s) >= c) = 2(1 - Φ(c / (σ√t)))` for `c >= 0`.
pub fn brownian_sup_prob(c: f64, t: f64, sigma: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    // 2(1 - Φ(x)) = erfc(x / √2)
    libm::erfc(c / (sigma * t.sqrt() * std::f64::consts::SQRT_2))
}

/// Maximum of a Brownian bridge from 0 to `y` over time `s_len`, computed
/// from the uniform `u` by inverting `P(M >= m) = exp(-2m(m-y)/(σ² s_len))`.
#[inline]
pub fn bridge_max_from_uniform(y: f64, s_len: f64, sigma: f64, u: f64) -> f64 {
    0.5 * (y + (y * y - 2.0 * sigma * sigma * s_len * u.ln()).sqrt())
}

/// Exact draw of the maximum of `σB` on `[0, s_len]` given `σB(s_len) = y`.
/// Drift does not change the bridge law.
pub fn bridge_max_sample(y: f64, s_len: f64, sigma: f64, s: &mut RandomStream) -> f64 {
    let m = bridge_max_from_uniform(y, s_len, sigma, s.next_uniform());
    debug_assert!(m >= y.max(0.0));
    m
}

/// Crude Monte Carlo replication of `1{A_n}` on an exactly simulated path.
///
/// Every jump on `[0, n]` is simulated. Between jumps the Brownian-with-drift
/// part is advanced exactly and its segment maximum is drawn from the bridge
/// law, so the running supremum is exact. Post-jump values count toward the
/// supremum. `value` is the indicator; `k` counts jumps at or above `n·γ`.
pub fn exact_path_replicate(
    params: &EstimatorParams,
    model: &HeavyTailModel,
    s: &mut RandomStream,
) -> Result<SampleRecord> {
    if !(model.sigma() > 0.0) {
        return Err(Error::UnsupportedModel(
            "exact-path oracle needs a Brownian component (sigma > 0)".into(),
        ));
    }
    let horizon = params.n() as f64;
    let count = s.sample_poisson(model.lambda() * horizon)? as usize;
    let mut jumps: Vec<(f64, f64)> = (0..count)
        .map(|_| (s.next_uniform() * horizon, model.sample_jump(s)))
        .collect();
    let k = jumps.iter().filter(|j| j.1 >= params.threshold()).count() as u64;
    let record = |hit: bool| SampleRecord {
        value: if hit { 1.0 } else { 0.0 },
        k,
        tau: 0,
        branch: Branch::Nominal,
        crossed: hit,
    };
    if jumps.iter().any(|j| j.1 >= params.cap()) {
        return Ok(record(false));
    }
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));

    let barrier = params.barrier();
    if barrier <= 0.0 {
        return Ok(record(true));
    }
    let (sigma, drift) = (model.sigma(), model.drift());
    let mut level = 0.0;
    let mut start = 0.0;
    for i in 0..=jumps.len() {
        let end = if i < jumps.len() { jumps[i].0 } else { horizon };
        let dt = end - start;
        if dt > 0.0 {
            let y = drift * dt + sigma * dt.sqrt() * s.next_gaussian();
            if level + bridge_max_sample(y, dt, sigma, s) >= barrier {
                return Ok(record(true));
            }
            level += y;
        }
        if i < jumps.len() {
            level += jumps[i].1;
            if level >= barrier {
                return Ok(record(true));
            }
        }
        start = end;
    }
    Ok(record(false))
}

/// `P(K = k | K >= l_star)` for `K ~ Poisson(mean)`.
pub fn conditional_poisson_pmf(mean: f64, l_star: u64, k: u64) -> Result<f64> {
    if k < l_star {
        return Err(invalid("k", k as f64, "below the conditioning level"));
    }
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid("mean", mean, "must be finite and >= 0"));
    }
    let tail = poisson_upper_tail(mean, l_star);
    if !(tail > 0.0) {
        return Err(invalid("mean", mean, "conditioning event has probability 0"));
    }
    Ok(poisson_pmf(mean, k) / tail)
}
