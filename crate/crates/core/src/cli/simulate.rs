use clap::Args;

use super::{emit, CliError, CliResult};
use crate::asymptotics::ModelFamily;
use crate::simulate::{delta_from_dof, run as run_sim, RegressionSpec, SimConfig, SimKind};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// risk, corner, coverage, power or quantile-test.
    #[arg(long)]
    pub kind: SimKind,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Local alternative `γₙ = δ/√n`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Degrees of freedom, `m = √n/δ` (`inf` for normal data).
    #[arg(long)]
    pub m: Option<f64>,
    /// `a = δ/κ` with `κ = √(2/3)`.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value = "quantile:0.75")]
    pub estimand: String,
    #[arg(long, value_delimiter = ',', default_value = "narrow,wide")]
    pub rules: Vec<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Test level (power, quantile-test) or one minus the interval level (coverage).
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    /// Regression with an intercept and `p − 1` standard normal covariates.
    #[arg(long)]
    pub regression_p: Option<usize>,
    /// JSON destination; without it the report goes to stdout and the summary to stderr.
    #[arg(long)]
    pub out: Option<String>,
}

fn same(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(1.0)
}

/// Resolves `δ` from whichever of `--delta`, `--m`, `--a` were given.
pub(crate) fn resolve_delta(n: usize, delta: Option<f64>, m: Option<f64>, a: Option<f64>) -> CliResult<f64> {
    let kappa = ModelFamily::T.kappa();
    let mut given = Vec::new();
    if let Some(d) = delta {
        given.push(("--delta", d));
    }
    if let Some(m) = m {
        given.push(("--m", delta_from_dof(n, m)?));
    }
    if let Some(a) = a {
        given.push(("--a", a * kappa));
    }
    let Some(&(_, d0)) = given.first() else {
        return Ok(0.0);
    };
    for &(flag, d) in &given[1..] {
        if !same(d, d0) {
            return Err(CliError::bad_input(format!(
                "{flag} implies delta = {d}, inconsistent with {} (delta = {d0})",
                given[0].0
            )));
        }
    }
    Ok(d0)
}

pub fn run(args: &SimulateArgs, seed: u64) -> CliResult {
    let delta = resolve_delta(args.n, args.delta, args.m, args.a)?;
    let mut cfg = SimConfig::new(args.kind, args.n, delta, args.replicates, seed);
    cfg.estimand = args.estimand.clone();
    cfg.rules = args.rules.clone();
    cfg.xi0 = args.xi0;
    cfg.sigma0 = args.sigma0;
    if let Some(l) = args.level {
        cfg.level = l;
    }
    cfg.bootstrap = args.bootstrap;
    cfg.regression = args.regression_p.map(|p| RegressionSpec { p });
    let report = run_sim(&cfg)?;
    let json = report.to_json()? + "\n";
    match &args.out {
        Some(path) => {
            emit(Some(path), &json)?;
            println!("{}", report.summary());
        }
        None => {
            emit(None, &json)?;
            eprintln!("{}", report.summary());
        }
    }
    Ok(())
}
