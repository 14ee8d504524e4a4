use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value};

use super::{emit, CliError, CliResult};
use crate::densities::{MixtureSpec, QuasiT, QUASI_T_MIN_CUTOFF};
use crate::risk::{mixture_tolerance, quasi_t_kappa, quasi_t_tolerance, tolerance_threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    T,
    Mixture,
    QuasiT,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    #[arg(long, value_enum, default_value_t = Family::T)]
    pub family: Family,
    /// Mixture moments `E S = 1 + k1 γ`, `E(S−1)² = k2 γ` (default: the t family).
    #[arg(long, default_value_t = MixtureSpec::T.k1, allow_hyphen_values = true)]
    pub k1: f64,
    #[arg(long, default_value_t = MixtureSpec::T.k2)]
    pub k2: f64,
    /// Quasi-t cut-off (default √6).
    #[arg(long, default_value_t = QUASI_T_MIN_CUTOFF)]
    pub c: f64,
    #[arg(long)]
    pub json: bool,
}

fn report(args: &ToleranceArgs) -> CliResult<Vec<(&'static str, Value)>> {
    if !(args.n >= 1.0) {
        return Err(CliError::bad_input(format!("--n must be ≥ 1, got {}", args.n)));
    }
    let th = tolerance_threshold();
    let root_n = args.n.sqrt();
    let family = args.family.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut rows = vec![("family", json!(family)), ("n", json!(args.n))];
    match args.family {
        Family::T => rows.extend([
            ("a_star", json!(th.a_star)),
            ("delta_star", json!(th.delta_star)),
            ("m_coeff", json!(th.m_coeff)),
            ("m_min", json!(th.m_coeff * root_n)),
            ("gamma_max", json!(th.delta_star / root_n)),
        ]),
        Family::Mixture => {
            let spec = MixtureSpec::new(args.k1, args.k2)?;
            let bound = mixture_tolerance(&spec, args.n)?;
            rows.extend([
                ("k1", json!(spec.k1)),
                ("k2", json!(spec.k2)),
                ("a_star", json!(th.a_star)),
                ("kappa", json!(spec.kappa())),
                ("gamma_max", json!(th.a_star * spec.kappa() / root_n)),
                ("var_s_bound", json!(bound)),
                ("var_s_coeff", json!(bound * root_n)),
            ]);
        }
        Family::QuasiT => {
            let q = QuasiT::new(args.c)?;
            let (lo, hi) = q.permissible_interval()?;
            rows.extend([
                ("c", json!(args.c)),
                ("kappa", json!(quasi_t_kappa(args.c)?)),
                ("gamma_max", json!(quasi_t_tolerance(args.c, args.n)?)),
                ("kurtosis_derivative", json!(q.kurtosis_derivative()?)),
                ("permissible_lo", json!(lo)),
                ("permissible_hi", json!(hi)),
            ]);
        }
    }
    Ok(rows)
}

pub fn run(args: &ToleranceArgs) -> CliResult {
    let rows = report(args)?;
    let body = if args.json {
        let map: Map<String, Value> = rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        serde_json::to_string_pretty(&Value::Object(map)).map_err(|e| CliError::bad_input(e.to_string()))? + "\n"
    } else {
        rows.into_iter()
            .map(|(k, v)| match v.as_f64() {
                Some(x) if k == "n" => format!("{k} = {x}\n"),
                Some(x) => format!("{k} = {x:.6}\n"),
                _ => format!("{k} = {}\n", v.as_str().map_or_else(|| v.to_string(), str::to_owned)),
            })
            .collect()
    };
    emit(None, &body)
}
