//! Normalised risk functions `R(a)`, estimand-level risks, tolerance
//! thresholds and related diagnostics.

use std::fmt::Write as _;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::asymptotics::{bias_and_noise, ModelFamily};
use crate::compromise::ARule;
use crate::densities::{MixtureSpec, QuasiT};
use crate::error::{Error, Result};
use crate::estimand::{Estimand, NullPoint};
use crate::quadrature::{integrate_breaks, Tolerance};
use crate::special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};

const RISK_TOL: Tolerance = Tolerance { abs: 1e-12, rel: 1e-12 };

fn check_a(a: f64) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("a must be finite and ≥ 0, got {a}")));
    }
    Ok(())
}

/// Points where `â` may be non-smooth, inside `[0, upper]`.
fn breakpoints(rule: &ARule, a: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![0.0, a, upper];
    if let ARule::PreTest { d } | ARule::LimitedTranslation { d } = rule {
        pts.push(*d);
    }
    pts.retain(|p| (0.0..=upper).contains(p));
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    pts
}

/// `R(a) = a²Φ(−a) + ∫₀^∞ (â(t) − a)² φ(t − a) dt`, truncated at `a + 10`.
pub fn risk_quadrature(rule: &ARule, a: f64) -> Result<f64> {
    check_a(a)?;
    let upper = a + 10.0;
    let pts = breakpoints(rule, a, upper);
    let int = integrate_breaks(|t| (rule.a_hat(t) - a).powi(2) * norm_pdf(t - a), &pts, RISK_TOL)?;
    Ok(a * a * norm_sf(a) + int.value)
}

/// Closed forms for the narrow, wide, pre-test and limited-translation rules.
pub fn risk_closed(rule: &ARule, a: f64) -> Result<f64> {
    check_a(a)?;
    let (pa, fa) = (norm_cdf(a), norm_pdf(a));
    match *rule {
        ARule::Narrow => Ok(a * a),
        ARule::Wide => Ok(pa - a * fa + a * a * (1.0 - pa)),
        ARule::PreTest { d } => {
            let (p, f) = (norm_cdf(a - d), norm_pdf(a - d));
            Ok(p + a * a * norm_sf(a - d) - (a - d) * f)
        }
        ARule::LimitedTranslation { d } => {
            let (p, f) = (norm_cdf(a - d), norm_pdf(a - d));
            Ok((1.0 + d * d) * p + a * a * norm_sf(a - d) - (a + d) * f)
        }
        _ => Err(Error::InvalidConfig(format!("no closed-form risk for rule {}", rule.name()))),
    }
}

/// Tolerance threshold: the positive root `a*` of `R_narrow = R_wide`,
/// with `δ* = a*√(2/3)` and the degrees-of-freedom coefficient `1/δ*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub a_star: f64,
    pub delta_star: f64,
    pub m_coeff: f64,
}

/// `a² − R_wide(a) = (a² − 1)Φ(a) + aφ(a)`, with derivative `2aΦ(a)`.
fn crossover(a: f64) -> f64 {
    (a * a - 1.0) * norm_cdf(a) + a * norm_pdf(a)
}

pub fn tolerance_threshold() -> Threshold {
    let (mut lo, mut hi) = (0.5, 1.2);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if crossover(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..3 {
        a -= crossover(a) / (2.0 * a * norm_cdf(a));
    }
    let delta_star = a * (2.0f64 / 3.0).sqrt();
    Threshold { a_star: a, delta_star, m_coeff: 1.0 / delta_star }
}

/// `|R_narrow(a) − R_wide(a)|`-residual at the returned threshold.
pub fn threshold_residual(a: f64) -> f64 {
    crossover(a).abs()
}

/// Limiting risk `κ²b²R(a) + τ₀²` of `√n(μ* − μ_true)`.
pub fn estimand_risk<E: Estimand + ?Sized>(e: &E, null: &NullPoint, rule: &ARule, a: f64) -> Result<f64> {
    let bn = bias_and_noise(e, null)?;
    let k2 = ModelFamily::T.kappa().powi(2);
    if bn.b == 0.0 {
        check_a(a)?;
        return Ok(bn.tau0 * bn.tau0);
    }
    Ok(k2 * bn.b * bn.b * risk_quadrature(rule, a)? + bn.tau0 * bn.tau0)
}

/// Largest tolerable `Var S = k₂γ`, namely `a*κk₂/√n = a*/(√6 √n)`.
pub fn mixture_tolerance(spec: &MixtureSpec, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("n must be ≥ 1, got {n}")));
    }
    let t = tolerance_threshold();
    Ok(t.a_star * spec.kappa() * spec.k2 / n.sqrt())
}

/// Limiting coverage of the nominal narrow interval `μ̂ ± z τ̂₀/√n`.
pub fn coverage_narrow_ci(b: f64, delta: f64, tau0: f64, z_level: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(Error::domain(format!("tau0 must be > 0, got {tau0}")));
    }
    let shift = b * delta / tau0;
    Ok(norm_cdf(z_level - shift) - norm_cdf(-z_level - shift))
}

/// Power `Φ(a − z_{1−level})` of the one-sided test `Tₙ > z_{1−level}`.
pub fn t_test_power(a: f64, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level must lie in (0,1), got {level}")));
    }
    Ok(norm_cdf(a - norm_quantile(1.0 - level)))
}

/// `L(z) = E|z + N(0,1)| = |z|(2Φ(|z|) − 1) + 2φ(z)`.
pub fn abs_loss(z: f64) -> f64 {
    let x = z.abs();
    x * (1.0 - 2.0 * norm_sf(x)) + 2.0 * norm_pdf(x)
}

/// Absolute-loss risk of `â` for `a`, `E L(ρ(â(T∨0) − a))` with `T ∼ N(a,1)`.
/// The mass `Φ(−a)` at `T ≤ 0` sits in the first term.
pub fn abs_loss_transform(rule: &ARule, a: f64, rho: f64) -> Result<f64> {
    check_a(a)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!("rho must be > 0, got {rho}")));
    }
    let upper = a + 10.0;
    let pts = breakpoints(rule, a, upper);
    let int = integrate_breaks(|t| abs_loss(rho * (rule.a_hat(t) - a)) * norm_pdf(t - a), &pts, RISK_TOL)?;
    Ok(norm_sf(a) * abs_loss(rho * a) + int.value)
}

/// Information matrix of the quasi-t family at `γ = 0`, `σ₀ = 1`, for the
/// scores `(z, z² − 1, A(z))`.
pub fn quasi_t_information(c: f64) -> Result<Matrix3<f64>> {
    let q = QuasiT::new(c)?;
    let (m2, _) = q.moment_shifts()?;
    let aa = quasi_t_a_square(&q)?;
    #[rustfmt::skip]
    let j = Matrix3::new(
        1.0, 0.0, 0.0,
        0.0, 2.0, m2,
        0.0, m2, aa,
    );
    Ok(j)
}

fn quasi_t_a_square(q: &QuasiT) -> Result<f64> {
    let c = q.cutoff();
    let tol = Tolerance { abs: 1e-14, rel: 1e-13 };
    let core = integrate_breaks(|z| q.a(z).powi(2) * norm_pdf(z), &[0.0, 1.0, c], tol)?;
    // A is constant beyond c
    let tail = q.a(c).powi(2) * norm_sf(c);
    Ok(2.0 * (core.value + tail))
}

/// `κ = √((J⁻¹)₃₃)` of the quasi-t family.
pub fn quasi_t_kappa(c: f64) -> Result<f64> {
    let j = quasi_t_information(c)?;
    let inv = j.try_inverse().ok_or_else(|| Error::Singular("quasi-t information".into()))?;
    let k2 = inv[(2, 2)];
    if !(k2 > 0.0) {
        return Err(Error::Singular(format!("quasi-t information has (J⁻¹)₃₃ = {k2}")));
    }
    Ok(k2.sqrt())
}

/// Tolerance `|γ| ≤ κ/√n` under the two-sided criterion `|δ| ≤ κ`.
pub fn quasi_t_tolerance(c: f64, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("n must be ≥ 1, got {n}")));
    }
    Ok(quasi_t_kappa(c)? / n.sqrt())
}

/// One rule's risk over a grid of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub rule: ARule,
    pub values: Vec<f64>,
}

/// Risk curves for several rules on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    pub a_grid: Vec<f64>,
    pub curves: Vec<RiskCurve>,
}

/// `0, step, 2·step, …` up to `a_max` (inclusive up to rounding).
pub fn a_grid(a_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(a_max >= 0.0) || !a_max.is_finite() {
        return Err(Error::domain(format!("grid needs step > 0 and a_max ≥ 0, got ({a_max}, {step})")));
    }
    let k = (a_max / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| i as f64 * step).collect())
}

pub fn risk_table(a_grid: &[f64], rules: &[ARule]) -> Result<RiskTable> {
    let curves = rules
        .iter()
        .map(|rule| {
            let values = a_grid.par_iter().map(|&a| risk_quadrature(rule, a)).collect::<Result<Vec<_>>>()?;
            Ok(RiskCurve { rule: rule.clone(), values })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskTable { a_grid: a_grid.to_vec(), curves })
}

/// Risk curves scaled to an estimand, `κ²b²R(a) + τ₀²`.
pub fn estimand_risk_table<E: Estimand + ?Sized>(
    e: &E,
    null: &NullPoint,
    a_grid: &[f64],
    rules: &[ARule],
) -> Result<RiskTable> {
    let bn = bias_and_noise(e, null)?;
    let k2 = ModelFamily::T.kappa().powi(2);
    let mut t = risk_table(a_grid, rules)?;
    for c in &mut t.curves {
        for v in &mut c.values {
            *v = k2 * bn.b * bn.b * *v + bn.tau0 * bn.tau0;
        }
    }
    Ok(t)
}

impl RiskTable {
    /// CSV with header `a,<column>...` and four decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a");
        for c in &self.curves {
            out.push(',');
            out.push_str(&c.rule.column());
        }
        out.push('\n');
        for (i, a) in self.a_grid.iter().enumerate() {
            let _ = write!(out, "{a:.4}");
            for c in &self.curves {
                let _ = write!(out, ",{:.4}", c.values[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`RiskTable::to_csv`]. Column names are mapped
    /// back to rules with default parameters.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty risk table".into()))?;
        let mut cols = header.split(',');
        if cols.next().map(str::trim) != Some("a") {
            return Err(Error::Parse("risk table header must start with 'a'".into()));
        }
        let rules = cols.map(|c| c.trim().parse::<ARule>()).collect::<Result<Vec<_>>>()?;
        let mut a_grid = Vec::new();
        let mut values = vec![Vec::new(); rules.len()];
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != rules.len() + 1 {
                return Err(Error::Parse(format!("row {} has {} fields, expected {}", ln + 2, fields.len(), rules.len() + 1)));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
            a_grid.push(parse(fields[0])?);
            for (j, f) in fields[1..].iter().enumerate() {
                values[j].push(parse(f)?);
            }
        }
        let curves = rules.into_iter().zip(values).map(|(rule, values)| RiskCurve { rule, values }).collect();
        Ok(RiskTable { a_grid, curves })
    }

    pub fn curve(&self, column: &str) -> Option<&RiskCurve> {
        self.curves.iter().find(|c| c.rule.column() == column)
    }
}

/// Numeric `E|z + N|` for cross-checking [`abs_loss`].
pub fn abs_loss_numeric(z: f64) -> Result<f64> {
    let tol = Tolerance { abs: 1e-13, rel: 1e-13 };
    let pts = [(-12.0f64).min(-z - 1.0), -z, 12.0f64.max(-z + 1.0)];
    Ok(integrate_breaks(|x| (z + x).abs() * norm_pdf(x), &pts, tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compromise::{DEFAULT_LIMTRANS_D, DEFAULT_PRETEST_D};

    #[test]
    fn figure_starting_values() {
        let at0 = |r: ARule| risk_quadrature(&r, 0.0).unwrap();
        assert!((at0(ARule::Wide) - 0.5).abs() < 1e-9);
        assert!((at0(ARule::Ratio) - 0.2494).abs() < 5e-5);
        assert!((at0(ARule::EmpiricalBayes) - 0.3368).abs() < 5e-5);
        assert!((at0(ARule::Vague) - 0.8183).abs() < 5e-5);
        assert!((at0(ARule::PreTest { d: DEFAULT_PRETEST_D }) - 0.4360).abs() < 5e-5);
        assert!((at0(ARule::LimitedTranslation { d: DEFAULT_LIMTRANS_D }) - 0.2601).abs() < 5e-5);
    }

    #[test]
    fn closed_forms_agree() {
        for rule in [ARule::Narrow, ARule::Wide, ARule::PreTest { d: 0.8399 }, ARule::LimitedTranslation { d: 0.3834 }] {
            for k in 0..=20 {
                let a = k as f64 * 0.25;
                let q = risk_quadrature(&rule, a).unwrap();
                let c = risk_closed(&rule, a).unwrap();
                assert!((q - c).abs() < 1e-9, "{rule:?} a={a}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn threshold_constants() {
        let t = tolerance_threshold();
        assert!((t.a_star - 0.839_923_675_7).abs() < 1e-9);
        assert!((t.delta_star - 0.685_794_809_4).abs() < 1e-9);
        assert!((t.m_coeff - 1.458_162_100_7).abs() < 1e-9);
        assert!(threshold_residual(t.a_star) < 1e-10);
    }

    #[test]
    fn abs_loss_identities() {
        assert!((abs_loss(0.0) - 0.797_884_560_802_865_4).abs() < 1e-15);
        assert!(abs_loss(6.0) - 6.0 < 1e-6);
        for &z in &[0.0, 0.5, 2.0, -1.3] {
            assert!((abs_loss(z) - abs_loss_numeric(z).unwrap()).abs() < 1e-8, "z={z}");
        }
    }

    #[test]
    fn coverage_and_power() {
        assert!((coverage_narrow_ci(0.0, 2.0, 1.0, 1.645).unwrap() - 0.900_030_188_921_757).abs() < 1e-12);
        assert!((t_test_power(0.8399, 0.05).unwrap() - 0.210).abs() < 1e-3);
        assert!((t_test_power(0.8399, 0.10).unwrap() - 0.329).abs() < 1e-3);
        assert!((t_test_power(0.0, 0.05).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn quasi_t_constants() {
        let c = 6f64.sqrt();
        assert!((quasi_t_kappa(c).unwrap() - 1.895_284_5).abs() < 1e-6);
        let j = quasi_t_information(c).unwrap();
        assert!((j[(1, 2)] - 1.192_953_47).abs() < 1e-7);
        assert!((j[(2, 2)] - 0.989_957_42).abs() < 1e-7);
    }

    #[test]
    fn csv_round_trip() {
        let grid = a_grid(1.0, 0.25).unwrap();
        let t = risk_table(&grid, &ARule::table_rules()).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("a,narrow,wide,ratio,eb,vague,pre,lim\n"));
        assert_eq!(RiskTable::from_csv(&csv).unwrap().to_csv(), csv);
    }
}
