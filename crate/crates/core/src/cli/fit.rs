use std::fmt::Write as _;

use clap::{Args, ValueEnum};
use serde::{Serialize, Serializer};

use super::input::{parse_regression, parse_sample, read_input};
use super::{emit, parse_rules, CliError, CliResult};
use crate::compromise::{t_statistic, PlugIns};
use crate::estimand::{parse_estimand, AtCovariate, Estimand};
use crate::estimation::{
    fit_narrow_regression, fit_wide_regression, one_step_gamma, FitOptions, FitResult, RegressionDesign,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Narrow,
    Wide,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Data file (`-` for stdin): numbers, or CSV `y,x1,…` with --regression.
    #[arg(default_value = "-")]
    pub input: String,
    #[arg(long, value_enum, default_value_t = Model::Both)]
    pub model: Model,
    /// Treat the input as CSV rows `y,x1,…,xk`; an intercept is added.
    #[arg(long)]
    pub regression: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also report compromise estimates of this estimand.
    #[arg(long)]
    pub estimand: Option<String>,
    /// Rules for the compromise estimates.
    #[arg(long, value_delimiter = ',', default_value = "narrow,wide,pre,lim")]
    pub rules: Vec<String>,
    /// Covariates `x1,…,xk` at which a regression estimand is read (default: their means).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub at: Option<Vec<f64>>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

fn ser_dof<S: Serializer>(m: &f64, s: S) -> Result<S::Ok, S::Error> {
    if m.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*m)
    }
}

#[derive(Debug, Serialize)]
struct ModelReport {
    beta: Vec<f64>,
    sigma: f64,
    gamma: f64,
    /// `1/γ̂`, `"inf"` at the corner.
    #[serde(serialize_with = "ser_dof")]
    m: f64,
    loglik: f64,
    at_corner: bool,
    n_iter: usize,
    converged: bool,
}

impl From<&FitResult> for ModelReport {
    fn from(f: &FitResult) -> Self {
        ModelReport {
            beta: f.beta.clone(),
            sigma: f.sigma,
            gamma: f.gamma,
            m: f.dof(),
            loglik: f.loglik,
            at_corner: f.at_corner,
            n_iter: f.n_iter,
            converged: f.converged,
        }
    }
}

#[derive(Debug, Serialize)]
struct Estimate {
    rule: String,
    value: f64,
}

#[derive(Debug, Serialize)]
struct FitReport {
    n: usize,
    p: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    coefficients: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    narrow: Option<ModelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wide: Option<ModelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    one_step_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimand: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    estimates: Vec<Estimate>,
}

impl FitReport {
    fn to_text(&self) -> String {
        let mut s = format!("n = {}, p = {}\n", self.n, self.p);
        for (label, m) in [("narrow", &self.narrow), ("wide", &self.wide)] {
            let Some(m) = m else { continue };
            let beta: Vec<String> = m.beta.iter().map(|b| format!("{b:.6}")).collect();
            let _ = writeln!(
                s,
                "{label:<7} beta = [{}]  sigma = {:.6}  gamma = {:.6}  m = {}  loglik = {:.6}  at_corner = {}",
                beta.join(", "),
                m.sigma,
                m.gamma,
                if m.m.is_infinite() { "inf".to_string() } else { format!("{:.4}", m.m) },
                m.loglik,
                m.at_corner
            );
        }
        if let Some(t) = self.t_statistic {
            let _ = writeln!(s, "T_n = {t:.6}");
        }
        if let Some(e) = &self.estimand {
            for est in &self.estimates {
                let _ = writeln!(s, "{e} [{}] = {:.6}", est.rule, est.value);
            }
        }
        s
    }
}

pub fn run(args: &FitArgs) -> CliResult {
    let text = read_input(&args.input)?;
    let rules = if args.estimand.is_some() { parse_rules(&args.rules)? } else { Vec::new() };
    let (design, y, coefficients) = if args.regression {
        let r = parse_regression(&text)?;
        let design = RegressionDesign::with_intercept(&r.covariates)?;
        let mut names = vec!["(intercept)".to_string()];
        names.extend(r.names.into_iter().skip(1));
        (design, r.y, names)
    } else {
        let y = parse_sample(&text)?;
        (RegressionDesign::intercept(y.len())?, y, Vec::new())
    };
    let n = y.len();
    let narrow = fit_narrow_regression(&design, &y)?;
    let wide = match args.model {
        Model::Narrow => None,
        _ => Some(fit_wide_regression(&design, &y, &FitOptions::default())?),
    };

    let mut estimates = Vec::new();
    if let (Some(spec), Some(w)) = (&args.estimand, &wide) {
        let e = estimand_for(spec, &design, args)?;
        let plug = PlugIns::from_fits(e.as_ref(), n, &narrow, w)?;
        estimates = rules.iter().map(|r| Estimate { rule: r.name(), value: plug.combine(r) }).collect();
    } else if args.estimand.is_some() {
        return Err(CliError::bad_input("compromise estimates need the wide fit; drop --model narrow"));
    }

    let one_step = (!args.regression && args.model != Model::Wide)
        .then(|| one_step_gamma(&y, narrow.xi(), narrow.sigma).map(|o| o.gamma))
        .transpose()?;
    let report = FitReport {
        n,
        p: design.p(),
        coefficients,
        narrow: (args.model != Model::Wide).then(|| ModelReport::from(&narrow)),
        t_statistic: wide.as_ref().map(|w| t_statistic(n, w.gamma)),
        wide: wide.as_ref().map(ModelReport::from),
        one_step_gamma: one_step,
        estimand: args.estimand.clone(),
        estimates,
    };
    let body = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(|e| CliError::bad_input(e.to_string()))? + "\n",
        Format::Text => report.to_text(),
    };
    emit(args.out.as_deref(), &body)
}

fn estimand_for(spec: &str, design: &RegressionDesign, args: &FitArgs) -> CliResult<Box<dyn Estimand>> {
    let base = parse_estimand(spec)?;
    if !args.regression {
        return Ok(base);
    }
    let k = design.p() - 1;
    let x_cov = match &args.at {
        Some(v) if v.len() != k => {
            return Err(CliError::bad_input(format!("--at needs {k} covariate values, got {}", v.len())))
        }
        Some(v) => v.clone(),
        None => (1..=k).map(|j| design.x().column(j).mean()).collect(),
    };
    let mut x = vec![1.0];
    x.extend(x_cov);
    Ok(Box::new(AtCovariate::new(base, x, design)?))
}
