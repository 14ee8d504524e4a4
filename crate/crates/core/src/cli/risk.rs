use clap::Args;

use super::input::read_input;
use super::svg::risk_svg;
use super::{emit, parse_rules, CliResult};
use crate::compromise::ARule;
use crate::estimand::{parse_estimand, NullPoint};
use crate::risk::{a_grid, estimand_risk_table, risk_table, RiskTable};

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// Comma-separated rules (default: the seven table rules).
    #[arg(long, value_delimiter = ',')]
    pub rules: Option<Vec<String>>,
    #[arg(long, default_value_t = 5.0)]
    pub a_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// CSV destination (default stdout).
    #[arg(long)]
    pub out: Option<String>,
    /// Also draw the curves as an SVG line plot.
    #[arg(long)]
    pub svg: Option<String>,
    /// Scale to the limiting risk κ²b²R(a) + τ₀² of this estimand.
    #[arg(long)]
    pub estimand: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Re-read a CSV written earlier instead of computing.
    #[arg(long, conflicts_with_all = ["rules", "estimand"])]
    pub from: Option<String>,
}

pub fn run(args: &RiskArgs) -> CliResult {
    let table = match &args.from {
        Some(path) => RiskTable::from_csv(&read_input(path)?)?,
        None => compute(args)?,
    };
    emit(args.out.as_deref(), &table.to_csv())?;
    if let Some(path) = &args.svg {
        emit(Some(path), &risk_svg(&table, args.estimand.as_deref()))?;
    }
    Ok(())
}

fn compute(args: &RiskArgs) -> CliResult<RiskTable> {
    let rules = match &args.rules {
        Some(r) => parse_rules(r)?,
        None => ARule::table_rules(),
    };
    let grid = a_grid(args.a_max, args.step)?;
    Ok(match &args.estimand {
        None => risk_table(&grid, &rules)?,
        Some(spec) => {
            let e = parse_estimand(spec)?;
            let null = NullPoint::new(args.xi0, args.sigma0)?;
            estimand_risk_table(e.as_ref(), &null, &grid, &rules)?
        }
    })
}
