//! Smooth functionals `μ(ξ, σ, γ)` of the wide model and their partial
//! derivatives at the null `γ = 0`.

use std::fmt;

use crate::densities::{t_cdf, t_quantile};
use crate::error::{Error, Result};
use crate::estimation::RegressionDesign;
use crate::special::{ln_gamma_half_ratio_excess, norm_cdf, norm_pdf, norm_quantile, PHI0};

/// Null point `(ξ₀, σ₀)`. For regression estimands `xi0` is the null
/// location `x′β₀` at the estimand's covariate vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullPoint {
    pub xi0: f64,
    pub sigma0: f64,
}

impl NullPoint {
    pub fn new(xi0: f64, sigma0: f64) -> Result<Self> {
        if !xi0.is_finite() || !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::domain(format!("null point needs finite xi0 and sigma0 > 0, got ({xi0}, {sigma0})")));
        }
        Ok(NullPoint { xi0, sigma0 })
    }

    pub fn standard() -> Self {
        NullPoint { xi0: 0.0, sigma0: 1.0 }
    }
}

/// Partial derivatives of `μ` at `(ξ₀, σ₀, 0)`; `d_gamma` is the right derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub d_loc: f64,
    pub d_sigma: f64,
    pub d_gamma: f64,
}

/// A functional of the location-scale t model.
pub trait Estimand: Send + Sync {
    fn name(&self) -> String;

    /// `μ(loc, σ, γ)` for `γ ≥ 0`.
    fn eval(&self, loc: f64, sigma: f64, gamma: f64) -> Result<f64>;

    /// Location the estimand sees for coefficient vector `beta`.
    fn location(&self, beta: &[f64]) -> f64 {
        beta[0]
    }

    /// `x′D⁻¹x`; 1 for i.i.d. estimands.
    fn leverage(&self) -> f64 {
        1.0
    }

    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        numeric_partials(self, null)
    }
}

/// Central differences in `(loc, σ)` with step `10⁻⁶σ₀`, and a forward
/// difference in `γ` with step `10⁻⁵` refined by one Richardson step.
pub fn numeric_partials<E: Estimand + ?Sized>(e: &E, null: &NullPoint) -> Result<Partials> {
    let (x0, s0) = (null.xi0, null.sigma0);
    let h = 1e-6 * s0;
    let d_loc = (e.eval(x0 + h, s0, 0.0)? - e.eval(x0 - h, s0, 0.0)?) / (2.0 * h);
    let d_sigma = (e.eval(x0, s0 + h, 0.0)? - e.eval(x0, s0 - h, 0.0)?) / (2.0 * h);
    let f0 = e.eval(x0, s0, 0.0)?;
    let hg = 1e-5;
    let d1 = (e.eval(x0, s0, hg)? - f0) / hg;
    let d2 = (e.eval(x0, s0, 0.5 * hg)? - f0) / (0.5 * hg);
    let d_gamma = 2.0 * d2 - d1;
    let p = Partials { d_loc, d_sigma, d_gamma };
    check_partials(p)
}

fn check_partials(p: Partials) -> Result<Partials> {
    if p.d_loc.is_finite() && p.d_sigma.is_finite() && p.d_gamma.is_finite() {
        Ok(p)
    } else {
        Err(Error::domain(format!("non-finite estimand derivative {p:?}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("gamma must be finite and ≥ 0, got {gamma}")));
    }
    Ok(())
}

/// `A(t) = ∫_{−∞}^t φ(z)W(z) dz = −φ(t)(t³ + t)/4`.
pub fn a_integral(t: f64) -> f64 {
    -norm_pdf(t) * (t * t * t + t) / 4.0
}

/// `μ = ξ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mean;

impl Estimand for Mean {
    fn name(&self) -> String {
        "mean".into()
    }
    fn eval(&self, loc: f64, _sigma: f64, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        Ok(loc)
    }
    fn partials(&self, _null: &NullPoint) -> Result<Partials> {
        Ok(Partials { d_loc: 1.0, d_sigma: 0.0, d_gamma: 0.0 })
    }
}

/// Standard deviation `σ(1 − 2γ)^{−1/2}`, finite for `γ < ½`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StdDev;

impl Estimand for StdDev {
    fn name(&self) -> String {
        "sd".into()
    }
    fn eval(&self, _loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        if gamma >= 0.5 {
            return Err(Error::domain(format!("the t variance is infinite for gamma = {gamma} ≥ 1/2")));
        }
        Ok(sigma / (1.0 - 2.0 * gamma).sqrt())
    }
    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        Ok(Partials { d_loc: 0.0, d_sigma: 1.0, d_gamma: null.sigma0 })
    }
}

/// The `p`-quantile `ξ + σ G⁻¹(p, 1/γ)`.
#[derive(Debug, Clone, Copy)]
pub struct Quantile {
    p: f64,
}

impl Quantile {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0,1), got {p}")));
        }
        Ok(Quantile { p })
    }

    pub fn level(&self) -> f64 {
        self.p
    }

    /// Normalised bias factor `z_p + A(z_p)/φ(z_p)`, so that `b = σ₀` times it.
    pub fn bias_factor(&self) -> f64 {
        let z = norm_quantile(self.p);
        z + a_integral(z) / norm_pdf(z)
    }
}

impl Estimand for Quantile {
    fn name(&self) -> String {
        format!("quantile:{}", self.p)
    }
    fn eval(&self, loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let q = if gamma == 0.0 { norm_quantile(self.p) } else { t_quantile(self.p, 1.0 / gamma)? };
        Ok(loc + sigma * q)
    }
    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        let z = norm_quantile(self.p);
        Ok(Partials { d_loc: 1.0, d_sigma: z, d_gamma: null.sigma0 * (z * z * z + z) / 4.0 })
    }
}

/// Distribution function at a fixed point, `G((y − ξ)/σ, 1/γ)`.
#[derive(Debug, Clone, Copy)]
pub struct Probability {
    y: f64,
}

impl Probability {
    pub fn new(y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::domain("probability estimand needs a finite point"));
        }
        Ok(Probability { y })
    }
}

impl Estimand for Probability {
    fn name(&self) -> String {
        format!("prob:{}", self.y)
    }
    fn eval(&self, loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let z = (self.y - loc) / sigma;
        if gamma == 0.0 {
            Ok(norm_cdf(z))
        } else {
            t_cdf(z, 1.0 / gamma)
        }
    }
    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        let z = (self.y - null.xi0) / null.sigma0;
        let f = norm_pdf(z);
        Ok(Partials { d_loc: -f / null.sigma0, d_sigma: -f * z / null.sigma0, d_gamma: a_integral(z) })
    }
}

/// Mean absolute deviation `σ E|t_m|`, finite for `γ < 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAbsDev;

/// `E|t_m|` as a function of `γ = 1/m`.
pub fn t_abs_mean(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let root = (2.0 / std::f64::consts::PI).sqrt();
    if gamma == 0.0 {
        return Ok(root);
    }
    if gamma >= 1.0 {
        return Err(Error::domain(format!("E|t| is infinite for gamma = {gamma} ≥ 1")));
    }
    // √m Γ((m−1)/2) / (√π Γ(m/2)) rewritten through x = m/2
    let x = 0.5 / gamma;
    let xm = x - 0.5;
    Ok(root * (x / xm).sqrt() * (-ln_gamma_half_ratio_excess(xm)).exp())
}

impl Estimand for MeanAbsDev {
    fn name(&self) -> String {
        "mad".into()
    }
    fn eval(&self, _loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        Ok(sigma * t_abs_mean(gamma)?)
    }
    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        Ok(Partials { d_loc: 0.0, d_sigma: 2.0 * PHI0, d_gamma: 1.5 * null.sigma0 * PHI0 })
    }
}

/// An estimand evaluated at covariate vector `x` of a regression design:
/// the location becomes `x′β` and the leverage `x′D⁻¹x`.
pub struct AtCovariate<E> {
    inner: E,
    x: Vec<f64>,
    leverage: f64,
}

impl<E: Estimand> AtCovariate<E> {
    pub fn new(inner: E, x: Vec<f64>, design: &RegressionDesign) -> Result<Self> {
        let leverage = design.leverage(&x)?;
        Ok(AtCovariate { inner, x, leverage })
    }

    /// Uses a known leverage instead of one computed from a design.
    pub fn with_leverage(inner: E, x: Vec<f64>, leverage: f64) -> Self {
        AtCovariate { inner, x, leverage }
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }
}

impl<E: Estimand> Estimand for AtCovariate<E> {
    fn name(&self) -> String {
        format!("{}@x", self.inner.name())
    }
    fn eval(&self, loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        self.inner.eval(loc, sigma, gamma)
    }
    fn location(&self, beta: &[f64]) -> f64 {
        self.x.iter().zip(beta).map(|(a, b)| a * b).sum()
    }
    fn leverage(&self) -> f64 {
        self.leverage
    }
    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        self.inner.partials(null)
    }
}

/// Any closure `(loc, σ, γ) → μ`, differentiated numerically.
pub struct CustomEstimand<F> {
    name: String,
    f: F,
}

impl<F: Fn(f64, f64, f64) -> f64 + Send + Sync> CustomEstimand<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        CustomEstimand { name: name.into(), f }
    }
}

impl<F: Fn(f64, f64, f64) -> f64 + Send + Sync> Estimand for CustomEstimand<F> {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn eval(&self, loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let v = (self.f)(loc, sigma, gamma);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("{} is not finite at ({loc}, {sigma}, {gamma})", self.name)))
        }
    }
}

impl Estimand for Box<dyn Estimand> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn eval(&self, loc: f64, sigma: f64, gamma: f64) -> Result<f64> {
        (**self).eval(loc, sigma, gamma)
    }
    fn location(&self, beta: &[f64]) -> f64 {
        (**self).location(beta)
    }
    fn leverage(&self) -> f64 {
        (**self).leverage()
    }
    fn partials(&self, null: &NullPoint) -> Result<Partials> {
        (**self).partials(null)
    }
}

impl fmt::Debug for dyn Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Estimand({})", self.name())
    }
}

/// Grammar accepted by [`parse_estimand`].
pub const ESTIMAND_NAMES: [&str; 5] = ["mean", "sd", "quantile:P", "prob:Y", "mad"];

/// Parses `mean`, `sd`, `mad`, `quantile[:p]` (default 0.75) or `prob:y`.
pub fn parse_estimand(spec: &str) -> Result<Box<dyn Estimand>> {
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let num = |a: &str| {
        a.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{a}' in estimand '{spec}'")))
    };
    let e: Box<dyn Estimand> = match (head, arg) {
        ("mean", None) => Box::new(Mean),
        ("sd", None) => Box::new(StdDev),
        ("mad", None) => Box::new(MeanAbsDev),
        ("quantile", None) => Box::new(Quantile::new(0.75)?),
        ("quantile", Some(a)) => Box::new(Quantile::new(num(a)?)?),
        ("prob", Some(a)) => Box::new(Probability::new(num(a)?)?),
        _ => {
            return Err(Error::Parse(format!(
                "unknown estimand '{spec}'; expected one of {}",
                ESTIMAND_NAMES.join(", ")
            )))
        }
    };
    Ok(e)
}

/// The i.i.d. catalogue with default arguments: the upper quartile and the
/// probability at one null standard deviation.
pub fn builtin_estimands() -> Vec<Box<dyn Estimand>> {
    vec![
        Box::new(Mean),
        Box::new(StdDev),
        Box::new(Quantile { p: 0.75 }),
        Box::new(Probability { y: 1.0 }),
        Box::new(MeanAbsDev),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_matches_analytic_partials() {
        let null = NullPoint::new(0.3, 1.7).unwrap();
        for e in builtin_estimands() {
            let a = e.partials(&null).unwrap();
            let n = numeric_partials(e.as_ref(), &null).unwrap();
            for (x, y) in [(a.d_loc, n.d_loc), (a.d_sigma, n.d_sigma), (a.d_gamma, n.d_gamma)] {
                assert!((x - y).abs() <= 1e-5 * x.abs().max(1e-2), "{}: {a:?} vs {n:?}", e.name());
            }
        }
    }

    #[test]
    fn a_integral_properties() {
        assert_eq!(a_integral(0.0), 0.0);
        // derivative is φW
        let h = 1e-5;
        for &t in &[-1.3, 0.4, 2.2] {
            let fd = (a_integral(t + h) - a_integral(t - h)) / (2.0 * h);
            let w = t.powi(4) / 4.0 - t * t / 2.0 - 0.25;
            assert!((fd - norm_pdf(t) * w).abs() < 1e-9);
        }
    }

    #[test]
    fn t_abs_mean_closed_forms() {
        // E|t_2| = √2 · Γ(1/2)/(√π Γ(1)) = √2
        assert!((t_abs_mean(0.5).unwrap() - 2f64.sqrt()).abs() < 1e-13);
        // E|t_3| = 2√3/π
        assert!((t_abs_mean(1.0 / 3.0).unwrap() - 2.0 * 3f64.sqrt() / std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["mean", "sd", "mad", "quantile:0.9", "prob:1.5"] {
            assert_eq!(parse_estimand(s).unwrap().name(), s);
        }
        assert!(parse_estimand("median").is_err());
        assert!(parse_estimand("quantile:1.5").is_err());
    }
}
