//! Rare-event estimation for heavy-tailed Lévy processes.
//!
//! The target is `P(sup_{t<=n} X(t) >= na, all jumps < nb)` for a process made
//! of Brownian motion with drift and compound Poisson Pareto jumps. The
//! estimator mixes the nominal law of the large jumps with a law conditioned on
//! enough large jumps to reach the barrier, and removes the discretisation bias
//! of the supremum of the remaining small-jump process with a randomised
//! stick-breaking construction.
//!
//! ```
//! use levy_is::{derive_params, HeavyTailModel, ImportanceSampler, RandomStream};
//!
//! let model = HeavyTailModel::new(1.0, 0.0, 0.1, 1.45).unwrap();
//! let params = derive_params(100, 0.8, 0.5, 0.1, 0.05, 0.95, &model).unwrap();
//! let sampler = ImportanceSampler::new(params, &model).unwrap();
//! let mut stream = RandomStream::new(7, 0);
//! let record = sampler.replicate(&mut stream).unwrap();
//! assert!(record.value >= 0.0);
//! ```

// `!(x > 0.0)` is used on purpose throughout so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod gof;
pub mod large_jumps;
pub mod model;
pub mod oracles;
pub mod param_theory;
pub mod rng;
pub mod runner;
pub mod sba;

pub use error::{Error, Result};
pub use estimator::{
    derive_params, crude_sba_replicate, is_replicate, Branch, EstimatorParams, ImportanceSampler,
    SampleRecord,
};
pub use large_jumps::LargeJumpPath;
pub use model::{HeavyTailModel, LevyModel, SmallIncrementSampler, SmallJumpLaw};
pub use param_theory::{validate, EfficiencyCertificate};
pub use rng::RandomStream;
pub use runner::{run, sweep, Method, RunConfig, RunStats, RunSummary};
