//! Lévy model family: drift + Brownian motion + compound Poisson with Pareto
//! jumps, and the increment-sampler contract the estimator is written against.

use crate::error::{invalid, Error, Result};
use crate::rng::RandomStream;

/// Operations the importance sampler needs from a Lévy model with heavy-tailed
/// positive jumps.
///
/// `tail_mass(x)` is `ν[x, ∞)`. Jumps at or above a cutoff form the compound
/// Poisson "large-jump" part; everything else is the small-jump process, which
/// must have exactly samplable increments over any time span.
pub trait LevyModel: Sync {
    type SmallJumps: SmallIncrementSampler;

    fn tail_mass(&self, x: f64) -> Result<f64>;

    /// Generalised inverse `inf{s > 0 : ν[s, ∞) < y}` of the tail restricted
    /// to `[floor, ∞)`.
    fn inverse_tail(&self, y: f64, floor: f64) -> Result<f64>;

    /// The small-jump process obtained by deleting all jumps `>= cutoff`.
    fn small_jumps(&self, cutoff: f64) -> Result<Self::SmallJumps>;

    /// One jump drawn from `ν` restricted to `[z, ∞)` and normalised.
    fn sample_jump_at_least(&self, z: f64, s: &mut RandomStream) -> Result<f64>;

    /// Whether the model has any jumps at all.
    fn has_jumps(&self) -> bool;
}

/// Exact sampler for increments `X^{<z}(t)` of a small-jump process.
pub trait SmallIncrementSampler: Sync {
    /// Draw `X^{<z}(t)`; `t = 0` returns exactly zero.
    fn sample_increment(&self, t: f64, s: &mut RandomStream) -> f64;
}

/// `X(t) = drift·t + σ·B(t) + Σ_{i ≤ N(t)} W_i` with `N` a rate-`lambda`
/// Poisson process and `P(W > x) = max(x, 1)^(-alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeavyTailModel {
    sigma: f64,
    drift: f64,
    lambda: f64,
    alpha: f64,
    centered: bool,
}

impl HeavyTailModel {
    pub fn new(sigma: f64, drift: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(invalid("sigma", sigma, "must be finite and >= 0"));
        }
        if !drift.is_finite() {
            return Err(invalid("drift", drift, "must be finite"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", lambda, "must be finite and >= 0"));
        }
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid("alpha", alpha, "tail index must exceed 1"));
        }
        if sigma == 0.0 && lambda == 0.0 {
            return Err(Error::Config(
                "degenerate model: sigma and lambda are both zero".into(),
            ));
        }
        Ok(Self {
            sigma,
            drift,
            lambda,
            alpha,
            centered: false,
        })
    }

    /// Replace the drift with `-lambda·E[W]` so that `E[X(t)] = 0`.
    pub fn centered(self) -> Self {
        Self {
            drift: -self.lambda * self.mean_jump(),
            centered: true,
            ..self
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Pareto mean `alpha / (alpha - 1)`.
    pub fn mean_jump(&self) -> f64 {
        self.alpha / (self.alpha - 1.0)
    }

    /// Jump size with `P(W > x) = (z/x)^alpha` from a uniform `u ∈ (0, 1]`.
    #[inline]
    pub fn jump_at_least_from_uniform(&self, z: f64, u: f64) -> f64 {
        z * u.powf(-1.0 / self.alpha)
    }

    /// Unit-floor Pareto jump, the law of every jump of the process.
    #[inline]
    pub(crate) fn sample_jump(&self, s: &mut RandomStream) -> f64 {
        self.jump_at_least_from_uniform(1.0, s.next_uniform())
    }
}

impl LevyModel for HeavyTailModel {
    type SmallJumps = SmallJumpLaw;

    fn tail_mass(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(invalid("x", x, "tail mass is defined for x > 0"));
        }
        Ok(if x <= 1.0 {
            self.lambda
        } else {
            self.lambda * x.powf(-self.alpha)
        })
    }

    fn inverse_tail(&self, y: f64, floor: f64) -> Result<f64> {
        if !(floor > 0.0) {
            return Err(invalid("floor", floor, "must be > 0"));
        }
        if !(y > 0.0) {
            return Err(invalid("y", y, "must be > 0"));
        }
        if y > self.tail_mass(floor)? {
            return Err(invalid("y", y, "exceeds the tail mass above the floor"));
        }
        Ok(floor.max((self.lambda / y).powf(1.0 / self.alpha)))
    }

    fn small_jumps(&self, cutoff: f64) -> Result<SmallJumpLaw> {
        SmallJumpLaw::new(*self, cutoff)
    }

    fn sample_jump_at_least(&self, z: f64, s: &mut RandomStream) -> Result<f64> {
        if !(z >= 1.0) {
            return Err(invalid("z", z, "conditional Pareto law needs z >= 1"));
        }
        Ok(self.jump_at_least_from_uniform(z, s.next_uniform()))
    }

    fn has_jumps(&self) -> bool {
        self.lambda > 0.0
    }
}

/// Small-jump part of a [`HeavyTailModel`]: jumps are Pareto conditioned on
/// `W < cutoff`, arriving at rate `lambda·P(W < cutoff)`.
#[derive(Clone, Copy, Debug)]
pub struct SmallJumpLaw {
    model: HeavyTailModel,
    cutoff: f64,
    small_rate: f64,
    // P(W < cutoff), the normaliser of the truncated jump law
    kept_mass: f64,
}

impl SmallJumpLaw {
    pub fn new(model: HeavyTailModel, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(invalid("cutoff", cutoff, "must be > 0"));
        }
        let kept_mass = if cutoff > 1.0 {
            1.0 - cutoff.powf(-model.alpha)
        } else {
            0.0
        };
        Ok(Self {
            model,
            cutoff,
            small_rate: model.lambda * kept_mass,
            kept_mass,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn small_rate(&self) -> f64 {
        self.small_rate
    }

    pub fn model(&self) -> &HeavyTailModel {
        &self.model
    }

    /// One Pareto jump conditioned on `W < cutoff`, by inversion.
    #[inline]
    pub fn sample_small_jump(&self, s: &mut RandomStream) -> f64 {
        let u = s.next_uniform();
        let w = (1.0 - u * self.kept_mass).powf(-1.0 / self.model.alpha);
        // pow rounding can land on the cutoff itself
        let w = if w >= self.cutoff { self.cutoff.next_down() } else { w };
        debug_assert!((1.0..self.cutoff).contains(&w));
        w
    }
}

impl SmallIncrementSampler for SmallJumpLaw {
    fn sample_increment(&self, t: f64, s: &mut RandomStream) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let mut x = self.model.drift * t;
        if self.model.sigma > 0.0 {
            x += self.model.sigma * t.sqrt() * s.next_gaussian();
        }
        if self.small_rate > 0.0 {
            let count = s.poisson_unchecked(self.small_rate * t);
            for _ in 0..count {
                x += self.sample_small_jump(s);
            }
        }
        x
    }
}
