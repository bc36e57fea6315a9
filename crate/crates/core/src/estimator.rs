//! The importance sampling estimator for `P(A_n)`, where `A_n` is the event
//! that `X(t)` reaches `n·a` on `[0, n]` while every jump stays below `n·b`.
//!
//! Each replication picks the nominal law with probability `w`, otherwise
//! conditions the large-jump process on having at least `l*` jumps, rejects
//! paths with a jump at or above the cap, and divides the debiased crossing
//! estimate by the mixture density ratio.

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::large_jumps::{self, LargeJumpPath};
use crate::model::LevyModel;
use crate::param_theory;
use crate::rng::{poisson_upper_tail, RandomStream};
use crate::sba;

/// Algorithm parameters together with the quantities derived from them.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorParams {
    n: u64,
    a: f64,
    b: f64,
    gamma: f64,
    w: f64,
    rho: f64,
    l_star: u64,
    lambda_n: f64,
    p_n: f64,
}

impl EstimatorParams {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn l_star(&self) -> u64 {
        self.l_star
    }

    /// Expected number of large jumps, `n·ν[nγ, ∞)`.
    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    /// `P(B^γ_n)`: probability of at least `l*` large jumps.
    pub fn p_n(&self) -> f64 {
        self.p_n
    }

    /// Large-jump threshold `n·γ`.
    pub fn threshold(&self) -> f64 {
        self.n as f64 * self.gamma
    }

    /// Crossing level `n·a`.
    pub fn barrier(&self) -> f64 {
        self.n as f64 * self.a
    }

    /// Jump-size cap `n·b`.
    pub fn cap(&self) -> f64 {
        self.n as f64 * self.b
    }

    /// The same configuration with `w = 1`: the nominal law every time and
    /// unit likelihood weight, i.e. crude Monte Carlo on the same machinery.
    pub fn crude(&self) -> Self {
        Self {
            w: 1.0,
            ..self.clone()
        }
    }

    /// Probability of the nominal branch. Without large jumps the
    /// conditional law does not exist and the mixture collapses onto it.
    pub fn nominal_probability(&self) -> f64 {
        if self.p_n > 0.0 {
            self.w
        } else {
            1.0
        }
    }
}

/// Validate raw inputs and derive `l*`, `λ_n` and `p_n`.
pub fn derive_params<M: LevyModel>(
    n: u64,
    a: f64,
    b: f64,
    gamma: f64,
    w: f64,
    rho: f64,
    model: &M,
) -> Result<EstimatorParams> {
    if n == 0 {
        return Err(Error::Config("n must be a positive integer".into()));
    }
    for (name, v) in [("a", a), ("b", b), ("gamma", gamma)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, v, "must be finite and > 0"));
        }
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(invalid("w", w, "must lie in (0, 1)"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho", rho, "must lie in (0, 1)"));
    }
    let l_star = param_theory::min_jumps(a, b)?;
    if gamma >= b {
        return Err(Error::Config(format!(
            "gamma = {gamma} must be smaller than b = {b}"
        )));
    }
    let slack = a - (l_star as f64 - 1.0) * b;
    if gamma >= slack / l_star as f64 {
        warn!(
            "gamma = {gamma} is not below (a - (l*-1)b)/l* = {}; strong efficiency is not guaranteed",
            slack / l_star as f64
        );
    }
    if param_theory::is_integer(slack / gamma) {
        warn!("(a - (l*-1)b)/gamma = {} is an integer", slack / gamma);
    }

    let threshold = n as f64 * gamma;
    if threshold <= 1.0 && model.has_jumps() {
        warn!("n·gamma = {threshold} <= 1: every jump is large, small-jump part has no jumps");
    }
    let lambda_n = n as f64 * model.tail_mass(threshold)?;
    let p_n = poisson_upper_tail(lambda_n, l_star);
    if model.has_jumps() && !(p_n > 0.0) {
        return Err(Error::Config(format!(
            "P(at least {l_star} jumps >= n·gamma) underflows (lambda_n = {lambda_n:e}); reduce n·gamma"
        )));
    }
    if !model.has_jumps() {
        warn!("model has no jumps; the mixture reduces to the nominal law");
    }
    Ok(EstimatorParams {
        n,
        a,
        b,
        gamma,
        w,
        rho,
        l_star,
        lambda_n,
        p_n,
    })
}

/// `true` iff every jump of `jn` is strictly below `n·b`.
pub fn event_e_passes(jn: &LargeJumpPath, params: &EstimatorParams) -> bool {
    jn.max_jump() < params.cap()
}

/// Denominator `w + (1-w)/p_n · 1{k >= l*}`.
pub fn likelihood_weight(k: u64, params: &EstimatorParams) -> f64 {
    let w = params.nominal_probability();
    if k >= params.l_star && params.p_n > 0.0 {
        w + (1.0 - w) / params.p_n
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Nominal,
    Conditional,
}

/// One replication of an estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRecord {
    pub value: f64,
    /// Number of large jumps.
    pub k: u64,
    /// Truncation level; 0 when the debiasing step was skipped.
    pub tau: u32,
    pub branch: Branch,
    /// Whether the deepest supremum proxy reached the barrier.
    pub crossed: bool,
}

/// Estimator bound to a model and a parameter set.
pub struct ImportanceSampler<'m, M: LevyModel> {
    params: EstimatorParams,
    model: &'m M,
    law: M::SmallJumps,
}

impl<'m, M: LevyModel> ImportanceSampler<'m, M> {
    pub fn new(params: EstimatorParams, model: &'m M) -> Result<Self> {
        let law = model.small_jumps(params.threshold())?;
        Ok(Self { params, model, law })
    }

    pub fn params(&self) -> &EstimatorParams {
        &self.params
    }

    pub fn small_jumps(&self) -> &M::SmallJumps {
        &self.law
    }

    /// One draw of `L_n`.
    pub fn replicate(&self, s: &mut RandomStream) -> Result<SampleRecord> {
        let p = &self.params;
        let (jn, branch) = if s.next_uniform() < p.nominal_probability() {
            let jn = large_jumps::sample_unconditional(self.model, p.n, p.gamma, s)?;
            (jn, Branch::Nominal)
        } else {
            let jn = large_jumps::sample_conditional(self.model, p.n, p.gamma, p.l_star, s)?;
            (jn, Branch::Conditional)
        };
        let k = jn.jump_count() as u64;
        // The cap check only looks at J_n, so failing paths skip the SBA work.
        if !event_e_passes(&jn, p) {
            return Ok(SampleRecord {
                value: 0.0,
                k,
                tau: 0,
                branch,
                crossed: false,
            });
        }
        let debias = sba::debiased_crossing(&jn, p, &self.law, s)?;
        let value = debias.z / likelihood_weight(k, p);
        debug_assert!(value >= 0.0 && value <= debias.z / p.nominal_probability() * (1.0 + 1e-12));
        Ok(SampleRecord {
            value,
            k,
            tau: debias.tau,
            branch,
            crossed: debias.y_final == 1,
        })
    }
}

/// One replication of the importance sampling estimator.
pub fn is_replicate<M: LevyModel>(
    params: &EstimatorParams,
    model: &M,
    s: &mut RandomStream,
) -> Result<SampleRecord> {
    ImportanceSampler::new(params.clone(), model)?.replicate(s)
}

/// One replication of the crude estimator: nominal large jumps, unit weight.
pub fn crude_sba_replicate<M: LevyModel>(
    params: &EstimatorParams,
    model: &M,
    s: &mut RandomStream,
) -> Result<SampleRecord> {
    ImportanceSampler::new(params.crude(), model)?.replicate(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HeavyTailModel;

    fn reference_model() -> HeavyTailModel {
        HeavyTailModel::new(1.0, 0.0, 0.1, 1.45).unwrap()
    }

    fn reference_params(n: u64) -> EstimatorParams {
        derive_params(n, 2.0, 1.15, 0.2, 0.05, 0.95, &reference_model()).unwrap()
    }

    #[test]
    fn derived_quantities() {
        let p = reference_params(2000);
        assert_eq!(p.l_star(), 2);
        let lambda_n = 2000.0 * 0.1 * 400f64.powf(-1.45);
        assert!((p.lambda_n() - lambda_n).abs() < 1e-15);
        assert!((p.lambda_n() - 0.03373).abs() < 5e-5);
        let direct = 1.0 - (-lambda_n).exp() * (1.0 + lambda_n);
        assert!((p.p_n() - direct).abs() / direct < 1e-9);
        assert!((p.p_n() - 5.6e-4).abs() < 0.1e-4);
    }

    #[test]
    fn derive_rejects_invalid_inputs() {
        let m = reference_model();
        assert!(derive_params(2000, 2.3, 1.15, 0.2, 0.05, 0.95, &m).is_err());
        assert!(derive_params(2000, 2.0, 1.15, 1.15, 0.05, 0.95, &m).is_err());
        assert!(derive_params(2000, 2.0, 1.15, 0.2, 1.0, 0.95, &m).is_err());
        assert!(derive_params(2000, 2.0, 1.15, 0.2, 0.05, 1.0, &m).is_err());
        assert!(derive_params(0, 2.0, 1.15, 0.2, 0.05, 0.95, &m).is_err());
        assert!(derive_params(10, -2.0, 1.15, 0.2, 0.05, 0.95, &m).is_err());
        // gamma above the main-text bound only warns
        assert!(derive_params(2000, 2.0, 1.15, 0.5, 0.05, 0.95, &m).is_ok());
    }

    #[test]
    fn underflowing_conditioning_event_is_a_config_error() {
        let m = HeavyTailModel::new(1.0, 0.0, 0.1, 50.0).unwrap();
        let err = derive_params(1_000_000_000, 2.0, 1.15, 0.2, 0.05, 0.95, &m).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn event_e_cases() {
        let p = derive_params(1000, 2.0, 1.15, 0.2, 0.05, 0.95, &reference_model()).unwrap();
        assert!(event_e_passes(&LargeJumpPath::empty(1000.0, 200.0), &p));
        let over = LargeJumpPath::new(1000.0, 200.0, vec![(1.0, 1200.0)]).unwrap();
        assert!(!event_e_passes(&over, &p));
        let under = LargeJumpPath::new(1000.0, 200.0, vec![(1.0, 1100.0)]).unwrap();
        assert!(event_e_passes(&under, &p));
    }

    #[test]
    fn weights() {
        let p = reference_params(2000);
        assert_eq!(likelihood_weight(1, &p), 0.05);
        let expected = 0.05 + 0.95 / p.p_n();
        assert!((likelihood_weight(2, &p) - expected).abs() < 1e-9);
        let crude = p.crude();
        assert_eq!(likelihood_weight(0, &crude), 1.0);
        assert_eq!(likelihood_weight(5, &crude), 1.0);
    }

    #[test]
    fn crude_equals_is_with_unit_mixture_weight() {
        let m = reference_model();
        let p = derive_params(100, 0.8, 0.5, 0.1, 0.05, 0.95, &m).unwrap();
        let mut s1 = RandomStream::new(77, 0);
        let mut s2 = RandomStream::new(77, 0);
        for _ in 0..2000 {
            let a = crude_sba_replicate(&p, &m, &mut s1).unwrap();
            let b = is_replicate(&p.crude(), &m, &mut s2).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.branch, Branch::Nominal);
        }
    }

    #[test]
    fn unreachable_barrier_gives_zero_mean() {
        let m = reference_model();
        let p = derive_params(100, 1e6 + 0.5, 2e6, 0.1, 0.05, 0.95, &m).unwrap();
        let sampler = ImportanceSampler::new(p, &m).unwrap();
        let mut s = RandomStream::new(1, 0);
        for _ in 0..1000 {
            assert_eq!(sampler.replicate(&mut s).unwrap().value, 0.0);
        }
    }

    #[test]
    fn no_jump_model_uses_nominal_branch_only() {
        let m = HeavyTailModel::new(1.0, 0.0, 0.0, 1.5).unwrap();
        let p = derive_params(1, 1.0, 10.0, 0.2, 0.05, 0.95, &m).unwrap();
        assert_eq!(p.p_n(), 0.0);
        assert_eq!(p.nominal_probability(), 1.0);
        let sampler = ImportanceSampler::new(p, &m).unwrap();
        let mut s = RandomStream::new(2, 0);
        for _ in 0..1000 {
            let r = sampler.replicate(&mut s).unwrap();
            assert_eq!(r.branch, Branch::Nominal);
            assert_eq!(r.k, 0);
        }
    }
}
