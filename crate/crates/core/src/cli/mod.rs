//! Command-line front end: `fit`, `risk`, `tolerance` and `simulate`.
//!
//! Exit codes are 0 on success, 1 on runtime failure and 2 on bad input.

mod fit;
mod input;
mod risk;
mod simulate;
mod svg;
mod tolerance;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::{Parser, Subcommand};

use crate::compromise::{ARule, RULE_NAMES};
use crate::error::Error;
use crate::estimand::ESTIMAND_NAMES;

pub use input::{parse_regression, parse_sample, RegressionInput};

/// Bad input (unparseable data, invalid flags, too few observations).
pub const EXIT_BAD_INPUT: i32 = 2;
/// Runtime failure (non-convergence, I/O while writing).
pub const EXIT_RUNTIME: i32 = 1;

fn names_help() -> String {
    format!(
        "Rules: {}\nEstimands: {}\n\nFlags taking a local alternative accept --delta, --m (degrees of freedom, m = √n/δ) or --a (δ/κ).",
        RULE_NAMES.join(", "),
        ESTIMAND_NAMES.join(", ")
    )
}

#[derive(Debug, Parser)]
#[command(name = "tness", version, about = "How much t-ness can the normal model tolerate?", after_help = names_help())]
pub struct Cli {
    /// Root seed for anything random.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the normal and t models to a sample or a regression.
    #[command(after_help = names_help())]
    Fit(fit::FitArgs),
    /// Risk functions R(a) of the compromise rules as CSV, optionally SVG.
    #[command(after_help = names_help())]
    Risk(risk::RiskArgs),
    /// Tolerance radii for the t, scale-mixture and quasi-t families.
    Tolerance(tolerance::ToleranceArgs),
    /// Monte Carlo checks of the local asymptotics.
    #[command(after_help = names_help())]
    Simulate(simulate::SimulateArgs),
}

/// A message and the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn bad_input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_BAD_INPUT, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::Quadrature { .. } | Error::Io(_) => EXIT_RUNTIME,
            _ => EXIT_BAD_INPUT,
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub(crate) fn parse_rules(list: &[String]) -> CliResult<Vec<ARule>> {
    list.iter().map(|s| s.parse::<ARule>().map_err(CliError::from)).collect()
}

/// Writes to a file, or to stdout when `path` is `None` or `-`.
pub(crate) fn emit(path: Option<&str>, text: &str) -> CliResult {
    match path {
        None | Some("-") => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError { code: EXIT_RUNTIME, message: e.to_string() })
        }
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError { code: EXIT_RUNTIME, message: format!("cannot write {p}: {e}") }),
    }
}

pub fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::Fit(a) => fit::run(&a),
        Command::Risk(a) => risk::run(&a),
        Command::Tolerance(a) => tolerance::run(&a),
        Command::Simulate(a) => simulate::run(&a, cli.seed),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
