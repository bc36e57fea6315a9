//! Stick-breaking approximation of segment suprema and the randomised
//! debiasing estimator `Z_n` built on top of it.
//!
//! Between consecutive large jumps the small-jump process is observed only
//! through independent increments over a stick-breaking partition of the
//! segment. Summing positive parts over the first `base + m` sticks gives a
//! level-`m` proxy for the segment supremum; the proxies converge
//! geometrically, and a random truncation level with inverse-survival weights
//! turns the telescoping sum of their crossing indicators into an unbiased
//! estimate of the exact crossing probability.

use crate::error::{Error, Result};
use crate::estimator::EstimatorParams;
use crate::large_jumps::LargeJumpPath;
use crate::model::SmallIncrementSampler;
use crate::rng::RandomStream;

/// Stick lengths for one inter-jump segment; the last entry is the residual.
#[derive(Clone, Debug, PartialEq)]
pub struct StickSchedule {
    pub segment_length: f64,
    pub lengths: Vec<f64>,
}

impl StickSchedule {
    /// Break `segment_length` with the given uniforms: each stick takes a
    /// uniform fraction of what remains, and the remainder is appended.
    pub fn from_uniforms(segment_length: f64, uniforms: &[f64]) -> Self {
        let mut lengths = Vec::with_capacity(uniforms.len() + 1);
        let mut rest = segment_length.max(0.0);
        for &u in uniforms {
            let l = u * rest;
            lengths.push(l);
            rest -= l;
        }
        lengths.push(rest.max(0.0));
        Self {
            segment_length,
            lengths,
        }
    }

    /// Number of broken sticks, residual excluded.
    pub fn generated(&self) -> usize {
        self.lengths.len() - 1
    }

    pub fn residual(&self) -> f64 {
        *self.lengths.last().expect("schedule always has a residual stick")
    }
}

/// `generated` broken sticks plus one residual stick over `segment_length`.
pub fn build_sticks(segment_length: f64, generated: usize, s: &mut RandomStream) -> StickSchedule {
    let uniforms: Vec<f64> = (0..generated).map(|_| s.next_uniform()).collect();
    StickSchedule::from_uniforms(segment_length, &uniforms)
}

/// One small-jump increment per stick, residual included.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentIncrements {
    pub xi: Vec<f64>,
}

impl SegmentIncrements {
    pub fn sample<S: SmallIncrementSampler>(
        schedule: &StickSchedule,
        law: &S,
        s: &mut RandomStream,
    ) -> Self {
        Self {
            xi: schedule
                .lengths
                .iter()
                .map(|&l| law.sample_increment(l, s))
                .collect(),
        }
    }
}

/// Running sums `Σ_{j <= base + m} (ξ_j)^+` for `m = 0..=tau`, residual
/// excluded.
pub fn segment_supremum_levels(seg: &SegmentIncrements, base: usize, tau: usize) -> Result<Vec<f64>> {
    if seg.xi.len() != base + tau + 1 {
        return Err(Error::Config(format!(
            "expected {} increments (base {base} + tau {tau} + residual), got {}",
            base + tau + 1,
            seg.xi.len()
        )));
    }
    let mut levels = Vec::with_capacity(tau + 1);
    let mut acc = 0.0;
    for (j, &x) in seg.xi[..base + tau].iter().enumerate() {
        acc += x.max(0.0);
        if j + 1 >= base {
            levels.push(acc);
        }
    }
    if base == 0 {
        levels.insert(0, 0.0);
    }
    Ok(levels)
}

/// Sum of all increments of a segment, residual included.
pub fn segment_total(seg: &SegmentIncrements) -> f64 {
    neumaier_sum(seg.xi.iter().copied())
}

/// Compensated summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `⌈log₂(n²)⌉`, the number of sticks every level uses at minimum.
pub fn base_stick_count(n: u64) -> usize {
    let sq = (n as u128) * (n as u128);
    if sq <= 1 {
        0
    } else {
        (128 - (sq - 1).leading_zeros()) as usize
    }
}

/// Outcome of one debiased crossing evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct DebiasResult {
    pub z: f64,
    pub tau: u32,
    pub y_final: u8,
    /// Crossing indicators `Y_{n,0} ..= Y_{n,tau}`.
    pub levels: Vec<u8>,
}

/// Debiased estimate of `P(sup_{t <= n} X̃(t) + J_n(t) >= n·a | J_n)`.
///
/// Draws the truncation level, breaks every inter-jump segment into
/// `⌈log₂(n²)⌉ + tau` sticks plus a residual, and combines the level
/// indicators as `Y_0 + Σ_{m=1}^{tau} (Y_m - Y_{m-1}) / rho^(m-1)`.
pub fn debiased_crossing<S: SmallIncrementSampler>(
    jn: &LargeJumpPath,
    params: &EstimatorParams,
    law: &S,
    s: &mut RandomStream,
) -> Result<DebiasResult> {
    run_debias(jn, params, law, s, None)
}

/// As [`debiased_crossing`], also returning every stick schedule drawn.
pub fn debiased_crossing_traced<S: SmallIncrementSampler>(
    jn: &LargeJumpPath,
    params: &EstimatorParams,
    law: &S,
    s: &mut RandomStream,
) -> Result<(DebiasResult, Vec<StickSchedule>)> {
    let mut trace = Vec::new();
    let result = run_debias(jn, params, law, s, Some(&mut trace))?;
    Ok((result, trace))
}

fn run_debias<S: SmallIncrementSampler>(
    jn: &LargeJumpPath,
    params: &EstimatorParams,
    law: &S,
    s: &mut RandomStream,
    trace: Option<&mut Vec<StickSchedule>>,
) -> Result<DebiasResult> {
    check_consistent(jn, params)?;
    let tau = s.truncation_level_unchecked(params.rho());
    let sup = level_maxima(jn, params, law, tau as usize, s, trace)?;
    let barrier = params.barrier();
    let levels: Vec<u8> = sup.iter().map(|&m| u8::from(m >= barrier)).collect();

    let mut z = f64::from(levels[0]);
    let mut weight = 1.0;
    for m in 1..levels.len() {
        // weight = 1 / P(tau >= m) = rho^-(m-1)
        if m > 1 {
            weight /= params.rho();
        }
        z += (f64::from(levels[m]) - f64::from(levels[m - 1])) * weight;
    }
    debug_assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    Ok(DebiasResult {
        z,
        tau,
        y_final: *levels.last().expect("at least level 0"),
        levels,
    })
}

/// Crossing indicator `Y_{n,level}` at a fixed approximation level.
pub fn crossing_at_level<S: SmallIncrementSampler>(
    jn: &LargeJumpPath,
    params: &EstimatorParams,
    law: &S,
    level: usize,
    s: &mut RandomStream,
) -> Result<bool> {
    check_consistent(jn, params)?;
    let sup = level_maxima(jn, params, law, level, s, None)?;
    Ok(sup[level] >= params.barrier())
}

fn check_consistent(jn: &LargeJumpPath, params: &EstimatorParams) -> Result<()> {
    let horizon = params.n() as f64;
    if jn.horizon() != horizon || jn.threshold() != params.threshold() {
        return Err(Error::Config(format!(
            "large-jump path (horizon {}, threshold {}) does not match parameters (n {}, n·gamma {})",
            jn.horizon(),
            jn.threshold(),
            horizon,
            params.threshold()
        )));
    }
    Ok(())
}

/// For each level `m = 0..=depth`, `max_i M̃^{(i)}_m + J_n(u_i)`.
fn level_maxima<S: SmallIncrementSampler>(
    jn: &LargeJumpPath,
    params: &EstimatorParams,
    law: &S,
    depth: usize,
    s: &mut RandomStream,
    mut trace: Option<&mut Vec<StickSchedule>>,
) -> Result<Vec<f64>> {
    let base = base_stick_count(params.n());
    let horizon = jn.horizon();
    let times = jn.times();
    let sizes = jn.sizes();

    let mut best = vec![f64::NEG_INFINITY; depth + 1];
    let mut before = 0.0; // Σ of full increments over earlier segments
    let mut jumps = 0.0; // J_n(u_i)
    let mut start = 0.0;
    for i in 0..=times.len() {
        if i > 0 {
            jumps += sizes[i - 1];
        }
        let end = if i < times.len() { times[i] } else { horizon };
        let schedule = build_sticks_interleaved(end - start, base + depth, law, s);
        let levels = segment_supremum_levels(&schedule.1, base, depth)?;
        for (b, lvl) in best.iter_mut().zip(&levels) {
            *b = b.max(before + lvl + jumps);
        }
        before += segment_total(&schedule.1);
        if let Some(t) = trace.as_deref_mut() {
            t.push(schedule.0);
        }
        start = end;
    }
    Ok(best)
}

/// Break a segment and draw the increment on each stick as soon as its
/// length is known, matching the draw order of the reference algorithm.
fn build_sticks_interleaved<S: SmallIncrementSampler>(
    segment_length: f64,
    generated: usize,
    law: &S,
    s: &mut RandomStream,
) -> (StickSchedule, SegmentIncrements) {
    let mut lengths = Vec::with_capacity(generated + 1);
    let mut xi = Vec::with_capacity(generated + 1);
    let mut rest = segment_length.max(0.0);
    for _ in 0..generated {
        let l = s.next_uniform() * rest;
        rest -= l;
        lengths.push(l);
        xi.push(law.sample_increment(l, s));
    }
    let residual = rest.max(0.0);
    lengths.push(residual);
    xi.push(law.sample_increment(residual, s));
    (
        StickSchedule {
            segment_length,
            lengths,
        },
        SegmentIncrements { xi },
    )
}
