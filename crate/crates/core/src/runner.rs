//! Experiment configuration, parallel execution and CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{derive_params, EstimatorParams, ImportanceSampler, SampleRecord};
use crate::model::HeavyTailModel;
use crate::oracles;
use crate::rng::RandomStream;

/// Streaming mean / variance accumulator with an exact pairwise merge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn p_hat(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation with the `count - 1` divisor.
    pub fn sample_std(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn std_err(&self) -> f64 {
        self.sample_std() / (self.count as f64).sqrt()
    }

    /// Per-sample standard deviation over the mean; NaN when the mean is 0.
    pub fn rel_err(&self) -> f64 {
        if self.mean == 0.0 {
            f64::NAN
        } else {
            self.sample_std() / self.mean
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Importance sampling estimator.
    Is,
    /// Same machinery under the nominal law with unit weight.
    CrudeSba,
    /// Exact-path crude Monte Carlo via Brownian-bridge maxima.
    CrudeExact,
}

impl Method {
    pub fn is_crude(self) -> bool {
        !matches!(self, Method::Is)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Is => "is",
            Method::CrudeSba => "crude-sba",
            Method::CrudeExact => "crude-exact",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "is" => Ok(Method::Is),
            "crude-sba" => Ok(Method::CrudeSba),
            "crude-exact" => Ok(Method::CrudeExact),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected is, crude-sba or crude-exact)"
            ))),
        }
    }
}

/// One experiment: model, event, algorithm parameters and run controls.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub sigma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub drift: f64,
    pub center: bool,
    pub n: u64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub w: f64,
    pub rho: f64,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    /// The reinsurance-style reference experiment: standard Brownian motion
    /// plus rate-0.1 Pareto(1.45) jumps, `a = 2`, `b = 1.15`, `γ = 0.2`,
    /// `w = 0.05`, `ρ = 0.95`, `n = 2000`.
    fn default() -> Self {
        Self {
            method: Method::Is,
            sigma: 1.0,
            lambda: 0.1,
            alpha: 1.45,
            drift: 0.0,
            center: false,
            n: 2000,
            a: 2.0,
            b: 1.15,
            gamma: 0.2,
            w: 0.05,
            rho: 0.95,
            samples: 500_000,
            seed: 1,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<HeavyTailModel> {
        let model = HeavyTailModel::new(self.sigma, self.drift, self.lambda, self.alpha)?;
        if self.center {
            if self.drift != 0.0 {
                warn!("--center overrides drift = {}", self.drift);
            }
            Ok(model.centered())
        } else {
            Ok(model)
        }
    }

    pub fn params(&self, model: &HeavyTailModel) -> Result<EstimatorParams> {
        derive_params(self.n, self.a, self.b, self.gamma, self.w, self.rho, model)
    }

    /// Set a single scalar field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "method" => self.method = v.parse()?,
            "sigma" => self.sigma = parse_num(key, v)?,
            "lambda" => self.lambda = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "drift" => self.drift = parse_num(key, v)?,
            "center" => self.center = parse_bool(key, v)?,
            "n" => self.n = parse_num(key, v)?,
            "a" => self.a = parse_num(key, v)?,
            "b" => self.b = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "w" => self.w = parse_num(key, v)?,
            "rho" => self.rho = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "" | "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{v}` for `{key}` as a boolean"))),
    }
}

/// Parse `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1))
        })?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// A grid of experiments: every combination of `alphas × ns × methods`
/// applied to `base`, in that nesting order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: RunConfig,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub ns: Vec<u64>,
    /// Size crude rows as `max(samples, ⌈64/p̂⌉)` capped by this budget, with
    /// `p̂` taken from the matching importance sampling estimate.
    pub crude_budget: Option<u64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = RunConfig::default();
        Self {
            methods: vec![base.method],
            alphas: vec![base.alpha],
            ns: vec![base.n],
            base,
            crude_budget: None,
        }
    }
}

impl ExperimentSpec {
    /// Set a field; `method`, `alpha` and `n` accept comma-separated lists.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
        match key {
            "method" => self.methods = list().map(str::parse).collect::<Result<_>>()?,
            "alpha" => self.alphas = list().map(|v| parse_num(key, v)).collect::<Result<_>>()?,
            "n" => self.ns = list().map(|v| parse_num(key, v)).collect::<Result<_>>()?,
            "crude-budget" => self.crude_budget = Some(parse_num(key, value.trim())?),
            _ => return self.base.set(key, value),
        }
        if self.methods.is_empty() || self.alphas.is_empty() || self.ns.is_empty() {
            return Err(Error::Config(format!("`{key}` needs at least one value")));
        }
        Ok(())
    }

    pub fn expand(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &n in &self.ns {
                for &method in &self.methods {
                    out.push(RunConfig {
                        method,
                        alpha,
                        n,
                        ..self.base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Result of one [`run`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub config: RunConfig,
    pub model: HeavyTailModel,
    pub params: EstimatorParams,
    pub stats: RunStats,
    pub mean_k: f64,
    pub mean_tau: f64,
    pub wall_time_s: f64,
}

pub const CSV_HEADER: &str = "method,alpha,sigma,lambda,drift,centered,n,a,b,gamma,w,rho,l_star,lambda_n,p_n,samples,seed,workers,p_hat,std_err,rel_err,mean_k,mean_tau,wall_time_s";

/// 17 significant digits; non-finite values as `nan` / `inf` / `-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl RunSummary {
    /// CSV row matching [`CSV_HEADER`]; `wall_time_s` is left empty when
    /// `timing` is off so that seeded runs are byte-identical.
    pub fn csv_row(&self, timing: bool) -> String {
        let c = &self.config;
        let p = &self.params;
        let f = format_float;
        let fields = [
            c.method.to_string(),
            f(self.model.alpha()),
            f(self.model.sigma()),
            f(self.model.lambda()),
            f(self.model.drift()),
            self.model.is_centered().to_string(),
            p.n().to_string(),
            f(p.a()),
            f(p.b()),
            f(p.gamma()),
            f(p.w()),
            f(p.rho()),
            p.l_star().to_string(),
            f(p.lambda_n()),
            f(p.p_n()),
            self.stats.count().to_string(),
            c.seed.to_string(),
            c.workers.to_string(),
            f(self.stats.p_hat()),
            f(self.stats.std_err()),
            f(self.stats.rel_err()),
            f(self.mean_k),
            f(self.mean_tau),
            if timing { f(self.wall_time_s) } else { String::new() },
        ];
        fields.join(",")
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    stats: RunStats,
    k_sum: u64,
    tau_sum: u64,
}

impl Tally {
    fn push(&mut self, r: &SampleRecord) {
        self.stats.push(r.value);
        self.k_sum += r.k;
        self.tau_sum += u64::from(r.tau);
    }

    fn merge(&mut self, other: &Tally) {
        self.stats.merge(&other.stats);
        self.k_sum += other.k_sum;
        self.tau_sum += other.tau_sum;
    }
}

/// Sizes of the contiguous per-worker blocks.
pub fn worker_blocks(samples: u64, workers: usize) -> Vec<u64> {
    let w = workers as u64;
    (0..w)
        .map(|i| samples / w + u64::from(i < samples % w))
        .collect()
}

/// Run `config.samples` replications split over `config.workers` streams.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    if config.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let model = config.model()?;
    let params = config.params(&model)?;
    let started = Instant::now();

    let sampler = match config.method {
        Method::Is => Some(ImportanceSampler::new(params.clone(), &model)?),
        Method::CrudeSba => Some(ImportanceSampler::new(params.crude(), &model)?),
        Method::CrudeExact => {
            if !(model.sigma() > 0.0) {
                return Err(Error::UnsupportedModel(
                    "crude-exact needs sigma > 0".into(),
                ));
            }
            None
        }
    };
    let replicate = |s: &mut RandomStream| match &sampler {
        Some(is) => is.replicate(s),
        None => oracles::exact_path_replicate(&params, &model, s),
    };

    let blocks = worker_blocks(config.samples, config.workers);
    let tallies: Vec<Tally> = blocks
        .par_iter()
        .enumerate()
        .map(|(worker, &len)| {
            let mut s = RandomStream::new(config.seed, worker as u64);
            let mut t = Tally::default();
            for _ in 0..len {
                t.push(&replicate(&mut s)?);
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let mut total = Tally::default();
    for t in &tallies {
        total.merge(t);
    }

    let count = total.stats.count() as f64;
    let mean_of = |sum: u64| if count > 0.0 { sum as f64 / count } else { f64::NAN };
    let summary = RunSummary {
        config: config.clone(),
        model,
        mean_k: mean_of(total.k_sum),
        mean_tau: mean_of(total.tau_sum),
        params,
        stats: total.stats,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    info!(
        "{} alpha={} n={}: p_hat={:e} rel_err={} ({} samples, {:.2}s)",
        config.method,
        config.alpha,
        config.n,
        summary.stats.p_hat(),
        summary.stats.rel_err(),
        summary.stats.count(),
        summary.wall_time_s
    );
    Ok(summary)
}

/// Crude sample size `max(floor, ⌈64/p̂⌉)` capped at `budget`.
pub fn crude_sample_size(p_hat: f64, floor: u64, budget: u64) -> u64 {
    let wanted = if p_hat > 0.0 {
        (64.0 / p_hat).ceil().min(u64::MAX as f64) as u64
    } else {
        budget
    };
    wanted.max(floor).min(budget)
}

fn same_experiment(a: &RunConfig, b: &RunConfig) -> bool {
    RunConfig {
        method: Method::Is,
        samples: 0,
        seed: 0,
        workers: 1,
        ..a.clone()
    } == RunConfig {
        method: Method::Is,
        samples: 0,
        seed: 0,
        workers: 1,
        ..b.clone()
    }
}

/// Run every configuration in order and write one CSV row each, header
/// first. Rows are flushed as they complete, so a failing row leaves the
/// earlier rows in place.
pub fn sweep<W: Write>(
    configs: &[RunConfig],
    crude_budget: Option<u64>,
    timing: bool,
    out: &mut W,
) -> Result<Vec<RunSummary>> {
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let mut done: Vec<RunSummary> = Vec::with_capacity(configs.len());
    for config in configs {
        let mut config = config.clone();
        if let (Some(budget), true) = (crude_budget, config.method.is_crude()) {
            let reference = done
                .iter()
                .rev()
                .find(|r| r.config.method == Method::Is && same_experiment(&r.config, &config))
                .map(|r| r.stats.p_hat());
            let p_hat = match reference {
                Some(p) => p,
                None => run(&RunConfig {
                    method: Method::Is,
                    ..config.clone()
                })?
                .stats
                .p_hat(),
            };
            config.samples = crude_sample_size(p_hat, config.samples, budget);
        }
        let summary = run(&config)?;
        writeln!(out, "{}", summary.csv_row(timing))?;
        out.flush()?;
        done.push(summary);
    }
    Ok(done)
}
