//! Parametric robustness of the normal model against t-distributed and
//! general normal scale-mixture alternatives.
//!
//! The crate fits the narrow (normal) and wide (t, `γ = 1/m ≥ 0`) models by
//! maximum likelihood with the `γ = 0` corner handled exactly, combines the
//! two into compromise estimators, evaluates their limiting risk functions
//! and tolerance thresholds, and checks the corner asymptotics by Monte
//! Carlo simulation.

pub mod asymptotics;
pub mod cli;
pub mod compromise;
pub mod densities;
pub mod error;
pub mod estimand;
pub mod estimation;
pub mod quadrature;
pub mod risk;
pub mod simulate;
pub mod special;

pub use densities::{MixtureSpec, QuasiT, TParams};
pub use error::{Error, Result};
