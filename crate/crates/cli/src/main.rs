//! `levy-is`: run importance sampling and crude Monte Carlo experiments and
//! write one CSV row per configuration.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on runtime failures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use levy_is::param_theory::{self, DEFAULT_GRID_RESOLUTION};
use levy_is::runner::{self, ExperimentSpec};
use levy_is::Error;
use log::warn;

#[derive(Parser, Debug)]
#[command(name = "levy-is", version, about)]
struct Cli {
    /// Estimator(s): is, crude-sba, crude-exact (comma-separated)
    #[arg(long)]
    method: Option<String>,
    /// Pareto tail index, or a comma-separated list for a sweep
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Jump rate
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    drift: Option<f64>,
    /// Set the drift to minus the mean jump rate so that the process has mean 0
    #[arg(long)]
    center: bool,
    /// Horizon, or a comma-separated list for a sweep
    #[arg(long)]
    n: Option<String>,
    /// Barrier level per unit time
    #[arg(long)]
    a: Option<f64>,
    /// Jump cap per unit time
    #[arg(long)]
    b: Option<f64>,
    /// Large-jump threshold per unit time
    #[arg(long)]
    gamma: Option<f64>,
    /// Mixture weight of the nominal law
    #[arg(long)]
    w: Option<f64>,
    /// Geometric truncation parameter of the debiasing
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Size crude rows as max(samples, ceil(64/p_hat)) capped by this budget
    #[arg(long)]
    crude_budget: Option<u64>,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Leave wall_time_s empty so that seeded runs are byte-identical
    #[arg(long)]
    no_timing: bool,
    /// Print the efficiency certificate for each configuration and exit
    #[arg(long)]
    validate_only: bool,
    /// Density-bound exponent of the small-jump process used by --validate-only [default: 0.5]
    #[arg(long)]
    assump_alpha: Option<f64>,
    /// Hölder exponent of the small-jump density bound used by --validate-only [default: 1]
    #[arg(long)]
    assump_theta: Option<f64>,
    /// Grid points per searched parameter in the efficiency check [default: 200]
    #[arg(long)]
    grid: Option<usize>,
}

/// Settings that control the front end rather than the experiments.
struct Options {
    output: Option<PathBuf>,
    no_timing: bool,
    validate_only: bool,
    assump_alpha: f64,
    assump_theta: f64,
    grid: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            output: None,
            no_timing: false,
            validate_only: false,
            assump_alpha: 0.5,
            assump_theta: 1.0,
            grid: DEFAULT_GRID_RESOLUTION,
        }
    }
}

impl Options {
    /// Returns `false` when `key` is not a front-end setting.
    fn set(&mut self, key: &str, value: &str) -> Result<bool, Failure> {
        let bad = || Failure::Config(format!("cannot parse `{value}` for `{key}`"));
        let flag = || match value {
            "" | "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "output" => self.output = Some(PathBuf::from(value)),
            "no-timing" => self.no_timing = flag()?,
            "validate-only" => self.validate_only = flag()?,
            "assump-alpha" => self.assump_alpha = value.parse().map_err(|_| bad())?,
            "assump-theta" => self.assump_theta = value.parse().map_err(|_| bad())?,
            "grid" => self.grid = value.parse().map_err(|_| bad())?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("method", self.method.clone());
        put("alpha", self.alpha.clone());
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("drift", self.drift.map(|v| v.to_string()));
        put("center", self.center.then(|| "true".to_string()));
        put("n", self.n.clone());
        put("a", self.a.map(|v| v.to_string()));
        put("b", self.b.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("w", self.w.map(|v| v.to_string()));
        put("rho", self.rho.map(|v| v.to_string()));
        put("samples", self.samples.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("workers", self.workers.map(|v| v.to_string()));
        put("crude-budget", self.crude_budget.map(|v| v.to_string()));
        out
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn build(cli: &Cli) -> Result<(ExperimentSpec, Options), Failure> {
    let mut spec = ExperimentSpec::default();
    let mut opts = Options::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        for (k, v) in runner::parse_key_values(&text)? {
            if !opts.set(&k, &v)? {
                spec.set(&k, &v)?;
            }
        }
    }
    for (k, v) in cli.overrides() {
        spec.set(k, &v)?;
    }
    if let Some(path) = &cli.output {
        opts.output = Some(path.clone());
    }
    opts.no_timing |= cli.no_timing;
    opts.validate_only |= cli.validate_only;
    opts.assump_alpha = cli.assump_alpha.unwrap_or(opts.assump_alpha);
    opts.assump_theta = cli.assump_theta.unwrap_or(opts.assump_theta);
    opts.grid = cli.grid.unwrap_or(opts.grid);
    Ok((spec, opts))
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let (spec, opts) = build(cli)?;
    let configs = spec.expand();
    // Derive everything up front so that configuration errors never leave a
    // partial CSV behind.
    let mut derived = Vec::with_capacity(configs.len());
    for c in &configs {
        if c.workers == 0 {
            return Err(Failure::Config("workers must be at least 1".into()));
        }
        let model = c.model()?;
        derived.push(c.params(&model)?);
    }

    if opts.validate_only {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        for (c, params) in configs.iter().zip(&derived) {
            let cert =
                param_theory::validate(params, opts.assump_alpha, opts.assump_theta, opts.grid)?;
            if !cert.gamma_ok_main {
                warn!("gamma = {} violates the main sufficient condition", c.gamma);
            }
            if !cert.rho_ok {
                warn!("rho = {} is not above rho_min = {}", c.rho, cert.rho_min);
            }
            let io = |e: io::Error| Failure::Runtime(e.to_string());
            writeln!(out, "# method={} alpha={} n={}", c.method, c.alpha, c.n).map_err(io)?;
            writeln!(out, "l_star={}", params.l_star()).map_err(io)?;
            writeln!(out, "{cert}").map_err(io)?;
        }
        return Ok(());
    }

    let timing = !opts.no_timing;
    let result = match &opts.output {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))?;
            runner::sweep(&configs, spec.crude_budget, timing, &mut BufWriter::new(file))
        }
        None => runner::sweep(&configs, spec.crude_budget, timing, &mut io::stdout().lock()),
    };
    result.map(|_| ()).map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("levy-is: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("levy-is: {msg}");
            ExitCode::from(3)
        }
    }
}
