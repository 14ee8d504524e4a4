//! Estimators of the normalised t-ness `a` from `T ∨ 0`, and the compromise
//! estimators `μ* = (1 − w(Tₙ)) μ̂_narr + w(Tₙ) μ̂_wide` they induce through
//! `w(t) = â(t)/t`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimand::Estimand;
use crate::estimation::{fit_narrow_regression, fit_wide_regression, FitOptions, FitResult, RegressionDesign};
use crate::special::{norm_cdf, norm_pdf};

/// Pre-test cut-off at the tolerance threshold `a*`.
pub const DEFAULT_PRETEST_D: f64 = 0.8399;
/// Limited-translation cut-off with `1 + d² = 1.147`.
pub const DEFAULT_LIMTRANS_D: f64 = 0.383_405_790_253_616_3;

/// Below this `Tₙ` the rules whose weight diverges at 0 use the narrow estimate.
const T_EPS: f64 = 1e-8;

/// An `a`-estimation rule.
#[derive(Clone)]
pub enum ARule {
    Narrow,
    Wide,
    Ratio,
    Bayes { tau: f64 },
    EmpiricalBayes,
    Vague,
    PreTest { d: f64 },
    LimitedTranslation { d: f64 },
    Custom { name: String, a_hat: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for ARule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl PartialEq for ARule {
    fn eq(&self, other: &Self) -> bool {
        use ARule::*;
        match (self, other) {
            (Narrow, Narrow) | (Wide, Wide) | (Ratio, Ratio) | (EmpiricalBayes, EmpiricalBayes) | (Vague, Vague) => true,
            (Bayes { tau: a }, Bayes { tau: b }) => a == b,
            (PreTest { d: a }, PreTest { d: b }) | (LimitedTranslation { d: a }, LimitedTranslation { d: b }) => a == b,
            (Custom { a_hat: a, .. }, Custom { a_hat: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// `w₀(a) = (a²Φ(a) + aφ(a)) / ((a²+1)Φ(a) + aφ(a))`.
fn ratio_weight(a: f64) -> f64 {
    let (p, f) = (norm_cdf(a), norm_pdf(a));
    (a * a * p + a * f) / ((a * a + 1.0) * p + a * f)
}

/// `νt + √ν φ(√ν t)/Φ(√ν t)`, the posterior mean of `a` under an `N(0, τ²)`
/// prior truncated to the half-line.
fn shrunk_posterior_mean(nu: f64, t: f64) -> f64 {
    let r = nu.sqrt();
    nu * t + r * mills_inverse(r * t)
}

/// `φ(x)/Φ(x)`, accurate in the far left tail.
fn mills_inverse(x: f64) -> f64 {
    if x > -30.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        // asymptotic: −x / (1 − 1/x² + 3/x⁴)
        let u = 1.0 / (x * x);
        -x / (1.0 - u + 3.0 * u * u)
    }
}

impl ARule {
    /// The seven rules of the risk table, in column order.
    pub fn table_rules() -> Vec<ARule> {
        vec![
            ARule::Narrow,
            ARule::Wide,
            ARule::Ratio,
            ARule::EmpiricalBayes,
            ARule::Vague,
            ARule::PreTest { d: DEFAULT_PRETEST_D },
            ARule::LimitedTranslation { d: DEFAULT_LIMTRANS_D },
        ]
    }

    pub fn custom(name: impl Into<String>, a_hat: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ARule::Custom { name: name.into(), a_hat: Arc::new(a_hat) }
    }

    /// Short name; parameterised rules print as `kind:value`.
    pub fn name(&self) -> String {
        match self {
            ARule::Narrow => "narrow".into(),
            ARule::Wide => "wide".into(),
            ARule::Ratio => "ratio".into(),
            ARule::Bayes { tau } => format!("bayes:{tau}"),
            ARule::EmpiricalBayes => "eb".into(),
            ARule::Vague => "vague".into(),
            ARule::PreTest { d } => format!("pre:{d}"),
            ARule::LimitedTranslation { d } => format!("lim:{d}"),
            ARule::Custom { name, .. } => name.clone(),
        }
    }

    /// Column label in the risk table.
    pub fn column(&self) -> String {
        match self {
            ARule::PreTest { .. } => "pre".into(),
            ARule::LimitedTranslation { .. } => "lim".into(),
            other => other.name(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ARule::Bayes { tau } if !(tau > 0.0 && tau.is_finite()) => {
                Err(Error::InvalidConfig(format!("Bayes prior scale must be > 0, got {tau}")))
            }
            ARule::PreTest { d } | ARule::LimitedTranslation { d } if !(d >= 0.0 && d.is_finite()) => {
                Err(Error::InvalidConfig(format!("cut-off must be ≥ 0, got {d}")))
            }
            _ => Ok(()),
        }
    }

    /// `â(t)`; negative `t` is read as `t ∨ 0 = 0`.
    pub fn a_hat(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            ARule::Narrow => 0.0,
            ARule::Wide => t,
            ARule::Ratio => ratio_weight(t) * t,
            ARule::Bayes { tau } => shrunk_posterior_mean(tau * tau / (tau * tau + 1.0), t),
            ARule::EmpiricalBayes => shrunk_posterior_mean(t * t / (t * t + 1.0), t),
            ARule::Vague => t + mills_inverse(t),
            ARule::PreTest { d } => {
                if t > *d {
                    t
                } else {
                    0.0
                }
            }
            ARule::LimitedTranslation { d } => {
                if t > *d {
                    t - d
                } else {
                    0.0
                }
            }
            ARule::Custom { a_hat, .. } => a_hat(t),
        }
    }

    /// `w(t) = â(t)/t`, with the right limit at `t = 0`. Vague and Bayes
    /// diverge there and take the value 1 by convention.
    pub fn weight(&self, t: f64) -> f64 {
        if t > 0.0 {
            return self.a_hat(t) / t;
        }
        match self {
            ARule::Narrow | ARule::Ratio => 0.0,
            ARule::Wide | ARule::Vague | ARule::Bayes { .. } => 1.0,
            ARule::EmpiricalBayes => 2.0 * crate::special::PHI0,
            ARule::PreTest { d } | ARule::LimitedTranslation { d } => {
                if *d == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ARule::Custom { a_hat, .. } => {
                let h = 1e-8;
                a_hat(h) / h
            }
        }
    }

    /// Whether `w` blows up at 0, so that tiny `Tₙ` falls back to narrow.
    fn diverges_at_zero(&self) -> bool {
        matches!(self, ARule::Vague | ARule::Bayes { .. })
    }
}

impl FromStr for ARule {
    type Err = Error;

    /// `narrow`, `wide`, `ratio`, `eb`, `vague`, `bayes:τ`, `pre[:d]`, `lim[:d]`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: &str| a.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{a}' in rule '{s}'")));
        let rule = match (head, arg) {
            ("narrow", None) => ARule::Narrow,
            ("wide", None) => ARule::Wide,
            ("ratio", None) => ARule::Ratio,
            ("eb", None) => ARule::EmpiricalBayes,
            ("vague", None) => ARule::Vague,
            ("bayes", Some(a)) => ARule::Bayes { tau: num(a)? },
            ("pre", None) => ARule::PreTest { d: DEFAULT_PRETEST_D },
            ("pre", Some(a)) => ARule::PreTest { d: num(a)? },
            ("lim", None) => ARule::LimitedTranslation { d: DEFAULT_LIMTRANS_D },
            ("lim", Some(a)) => ARule::LimitedTranslation { d: num(a)? },
            _ => {
                return Err(Error::Parse(format!("unknown rule '{s}'; valid rules: {}", RULE_NAMES.join(", "))))
            }
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Grammar accepted by `ARule::from_str`.
pub const RULE_NAMES: [&str; 8] = ["narrow", "wide", "ratio", "eb", "vague", "bayes:TAU", "pre[:D]", "lim[:D]"];

/// `Tₙ = √(1.5 n) γ̂`.
pub fn t_statistic(n: usize, gamma_hat: f64) -> f64 {
    (1.5 * n as f64).sqrt() * gamma_hat
}

/// Narrow and wide plug-in estimates together with `Tₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugIns {
    pub narrow: f64,
    pub wide: f64,
    pub t_n: f64,
    pub at_corner: bool,
}

impl PlugIns {
    pub fn from_fits<E: Estimand + ?Sized>(e: &E, n: usize, narrow: &FitResult, wide: &FitResult) -> Result<Self> {
        let mu_narrow = e.eval(e.location(&narrow.beta), narrow.sigma, 0.0)?;
        let mu_wide = if wide.at_corner {
            e.eval(e.location(&wide.beta), wide.sigma, 0.0)?
        } else {
            e.eval(e.location(&wide.beta), wide.sigma, wide.gamma)?
        };
        Ok(PlugIns { narrow: mu_narrow, wide: mu_wide, t_n: t_statistic(n, wide.gamma), at_corner: wide.at_corner })
    }

    /// `μ*` for one rule. Narrow and Wide return their plug-ins exactly.
    pub fn combine(&self, rule: &ARule) -> f64 {
        match rule {
            ARule::Narrow => return self.narrow,
            ARule::Wide => return self.wide,
            _ => {}
        }
        if self.at_corner || (rule.diverges_at_zero() && self.t_n <= T_EPS) {
            return self.narrow;
        }
        let w = rule.weight(self.t_n);
        if w == 0.0 {
            self.narrow
        } else {
            self.narrow + w * (self.wide - self.narrow)
        }
    }
}

/// Fits both models and returns `μ*` for `rule`.
pub fn compromise_estimate<E: Estimand + ?Sized>(data: &[f64], e: &E, rule: &ARule) -> Result<f64> {
    let design = RegressionDesign::intercept(data.len())?;
    compromise_estimate_regression(&design, data, e, rule)
}

pub fn compromise_estimate_regression<E: Estimand + ?Sized>(
    design: &RegressionDesign,
    y: &[f64],
    e: &E,
    rule: &ARule,
) -> Result<f64> {
    rule.validate()?;
    let narrow = fit_narrow_regression(design, y)?;
    let wide = fit_wide_regression(design, y, &FitOptions::default())?;
    Ok(PlugIns::from_fits(e, y.len(), &narrow, &wide)?.combine(rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::PHI0;

    #[test]
    fn rule_examples() {
        assert!((ARule::Vague.a_hat(0.0) - 2.0 * PHI0).abs() < 1e-15);
        assert_eq!(ARule::EmpiricalBayes.a_hat(0.0), 0.0);
        // (Φ(1)+φ(1))/(2Φ(1)+φ(1)) from erfc
        assert!((ARule::Ratio.a_hat(1.0) - 0.562_860_634_418_766_8).abs() < 1e-12);
        let pre = ARule::PreTest { d: 0.8399 };
        assert_eq!(pre.a_hat(0.8), 0.0);
        assert_eq!(pre.a_hat(0.9), 0.9);
        assert!((ARule::LimitedTranslation { d: 0.38 }.weight(1.0) - 0.62).abs() < 1e-15);
        assert_eq!(ARule::Wide.weight(0.0), 1.0);
        assert_eq!(ARule::Narrow.weight(3.0), 0.0);
    }

    #[test]
    fn eb_weight_is_continuous_at_zero() {
        let w0 = ARule::EmpiricalBayes.weight(0.0);
        assert!((ARule::EmpiricalBayes.weight(1e-7) - w0).abs() < 1e-6);
        assert!((ARule::Ratio.weight(1e-9)).abs() < 1e-8);
    }

    #[test]
    fn mills_branches_meet() {
        let x = -30.0;
        let direct = norm_pdf(x) / norm_cdf(x);
        let u: f64 = 1.0 / (x * x);
        assert!(((-x / (1.0 - u + 3.0 * u * u)) - direct).abs() / direct < 1e-6);
    }

    #[test]
    fn parse_rules() {
        for r in ARule::table_rules() {
            let again: ARule = r.name().parse().unwrap();
            assert_eq!(again, r);
        }
        assert_eq!("bayes:2".parse::<ARule>().unwrap(), ARule::Bayes { tau: 2.0 });
        assert!("bayes:0".parse::<ARule>().is_err());
        assert!("median".parse::<ARule>().is_err());
    }

    #[test]
    fn limtrans_default_matches_eb_max() {
        assert!((1.0 + DEFAULT_LIMTRANS_D * DEFAULT_LIMTRANS_D - 1.147).abs() < 1e-15);
    }
}
