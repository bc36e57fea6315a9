//! The large-jump process `J_n`: all jumps of size at least `nγ` on `[0, n]`,
//! sampled either under the nominal law or conditioned on having at least
//! `l*` jumps.

use crate::error::{invalid, Error, Result};
use crate::model::LevyModel;
use crate::rng::RandomStream;

/// Step function `Σ z_i 1[u_i, n]` with jump times sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct LargeJumpPath {
    horizon: f64,
    threshold: f64,
    times: Vec<f64>,
    sizes: Vec<f64>,
}

impl LargeJumpPath {
    /// Build a path from unordered `(time, size)` pairs.
    pub fn new(horizon: f64, threshold: f64, jumps: Vec<(f64, f64)>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(invalid("horizon", horizon, "must be > 0"));
        }
        for &(t, z) in &jumps {
            if !(0.0..=horizon).contains(&t) {
                return Err(invalid("time", t, "jump time outside [0, horizon]"));
            }
            if !(z >= threshold) {
                return Err(invalid("size", z, "jump below the large-jump threshold"));
            }
        }
        Ok(Self::from_pairs(horizon, threshold, jumps))
    }

    fn from_pairs(horizon: f64, threshold: f64, mut jumps: Vec<(f64, f64)>) -> Self {
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (times, sizes) = jumps.into_iter().unzip();
        Self {
            horizon,
            threshold,
            times,
            sizes,
        }
    }

    pub fn empty(horizon: f64, threshold: f64) -> Self {
        Self::from_pairs(horizon, threshold, Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn jump_count(&self) -> usize {
        self.times.len()
    }

    /// `J(t) = Σ {z_i : u_i <= t}`.
    pub fn path_value(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(invalid("t", t, "outside [0, horizon]"));
        }
        Ok(self
            .times
            .iter()
            .zip(&self.sizes)
            .filter(|(&u, _)| u <= t)
            .map(|(_, &z)| z)
            .sum())
    }

    pub fn max_jump(&self) -> f64 {
        self.sizes.iter().copied().fold(0.0, f64::max)
    }
}

/// Jumps `>= nγ` under the nominal law: `Poisson(n·ν[nγ, ∞))` of them at
/// i.i.d. uniform times with sizes from `ν` normalised on `[nγ, ∞)`.
pub fn sample_unconditional<M: LevyModel>(
    model: &M,
    n: u64,
    gamma: f64,
    s: &mut RandomStream,
) -> Result<LargeJumpPath> {
    let (horizon, threshold, tail) = setup(model, n, gamma)?;
    let k = s.sample_poisson(horizon * tail)?;
    sample_marks(model, horizon, threshold, tail, k, s)
}

/// Jumps `>= nγ` conditioned on there being at least `l_star` of them.
///
/// The count is a Poisson draw conditioned on `k >= l_star`; each size is
/// `Q(Γ_i)` with `Γ_i` i.i.d. uniform on `(0, ν[nγ, ∞))` and `Q` the tail
/// inverse, and times are i.i.d. uniform on `[0, n]`.
pub fn sample_conditional<M: LevyModel>(
    model: &M,
    n: u64,
    gamma: f64,
    l_star: u64,
    s: &mut RandomStream,
) -> Result<LargeJumpPath> {
    if l_star == 0 {
        return Err(Error::Config("l_star must be at least 1".into()));
    }
    let (horizon, threshold, tail) = setup(model, n, gamma)?;
    let k = s.sample_poisson_at_least(horizon * tail, l_star)?;
    sample_marks(model, horizon, threshold, tail, k, s)
}

fn setup<M: LevyModel>(model: &M, n: u64, gamma: f64) -> Result<(f64, f64, f64)> {
    if n == 0 {
        return Err(Error::Config("n must be a positive integer".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", gamma, "must be finite and > 0"));
    }
    let horizon = n as f64;
    let threshold = horizon * gamma;
    let tail = model.tail_mass(threshold)?;
    Ok((horizon, threshold, tail))
}

fn sample_marks<M: LevyModel>(
    model: &M,
    horizon: f64,
    threshold: f64,
    tail: f64,
    k: u64,
    s: &mut RandomStream,
) -> Result<LargeJumpPath> {
    let k = k as usize;
    let mut sizes = Vec::with_capacity(k);
    for _ in 0..k {
        let gamma_i = s.next_uniform() * tail;
        let z = model.inverse_tail(gamma_i, threshold)?;
        assert!(z >= threshold, "large jump {z} below threshold {threshold}");
        sizes.push(z);
    }
    let jumps = sizes
        .into_iter()
        .map(|z| (s.next_uniform() * horizon, z))
        .collect();
    Ok(LargeJumpPath::from_pairs(horizon, threshold, jumps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HeavyTailModel;

    fn reference(alpha: f64) -> HeavyTailModel {
        HeavyTailModel::new(1.0, 0.0, 0.1, alpha).unwrap()
    }

    #[test]
    fn path_value_partial_and_full_sums() {
        let p = LargeJumpPath::new(10.0, 400.0, vec![(3.0, 600.0), (1.0, 500.0)]).unwrap();
        assert_eq!(p.times(), &[1.0, 3.0]);
        assert_eq!(p.path_value(0.0).unwrap(), 0.0);
        assert_eq!(p.path_value(2.0).unwrap(), 500.0);
        assert_eq!(p.path_value(10.0).unwrap(), 1100.0);
        assert!(p.path_value(10.5).is_err());
        assert!(p.path_value(-0.1).is_err());
    }

    #[test]
    fn max_jump_cases() {
        assert_eq!(LargeJumpPath::empty(5.0, 1.0).max_jump(), 0.0);
        let p = LargeJumpPath::new(1000.0, 200.0, vec![(5.0, 500.0), (9.0, 1200.0)]).unwrap();
        assert_eq!(p.max_jump(), 1200.0);
        // cap comparison at n·b = 1150
        assert!(p.max_jump() >= 1000.0 * 1.15);
    }

    #[test]
    fn new_rejects_inconsistent_jumps() {
        assert!(LargeJumpPath::new(10.0, 5.0, vec![(11.0, 6.0)]).is_err());
        assert!(LargeJumpPath::new(10.0, 5.0, vec![(1.0, 4.0)]).is_err());
        assert!(LargeJumpPath::new(0.0, 5.0, vec![]).is_err());
    }

    #[test]
    fn no_jump_model_never_jumps() {
        let m = HeavyTailModel::new(1.0, 0.0, 0.0, 1.5).unwrap();
        let mut s = RandomStream::new(0, 0);
        for _ in 0..1000 {
            assert_eq!(sample_unconditional(&m, 100, 0.1, &mut s).unwrap().jump_count(), 0);
        }
    }

    #[test]
    fn unconditional_zero_count_frequency() {
        let m = reference(1.45);
        let lambda_n = 2000.0 * 0.1 * 400f64.powf(-1.45);
        assert!((lambda_n - 0.03373).abs() < 5e-5);
        let mut s = RandomStream::new(8, 0);
        let n = 200_000;
        let zeros = (0..n)
            .filter(|_| sample_unconditional(&m, 2000, 0.2, &mut s).unwrap().jump_count() == 0)
            .count();
        let p0 = (-lambda_n).exp();
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - p0).abs() < 3.0 * se);
    }

    #[test]
    fn conditional_paths_satisfy_construction() {
        let m = reference(1.45);
        let mut s = RandomStream::new(9, 0);
        for _ in 0..10_000 {
            let p = sample_conditional(&m, 2000, 0.2, 2, &mut s).unwrap();
            assert!(p.jump_count() >= 2);
            assert!(p.sizes().iter().all(|&z| z >= 400.0));
            assert!(p.times().windows(2).all(|w| w[0] <= w[1]));
            assert!(p.times().iter().all(|&t| (0.0..=2000.0).contains(&t)));
        }
        assert!(sample_conditional(&m, 2000, 0.2, 0, &mut s).is_err());
    }
}
