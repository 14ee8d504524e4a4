//! Densities, distribution functions and low-order expansions for the
//! normal, the t location-scale family in the `γ = 1/m` parameterisation,
//! general normal scale mixtures, and the quasi-t family.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, integrate_upper, Tolerance};
use crate::special::{
    ln_gamma_half_ratio_excess, ln_gamma_half_ratio_excess_deriv, log1p_remainder, norm_cdf,
    norm_ln_pdf, norm_pdf, norm_quantile, norm_sf, LN_SQRT_2PI,
};

/// A point `(ξ, σ, γ)` of the wide model; `γ = 0` is the normal sub-model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TParams {
    pub xi: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl TParams {
    pub fn new(xi: f64, sigma: f64, gamma: f64) -> Result<Self> {
        let p = TParams { xi, sigma, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn normal(xi: f64, sigma: f64) -> Result<Self> {
        Self::new(xi, sigma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.xi.is_finite() {
            return Err(Error::domain(format!("location must be finite, got {}", self.xi)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::domain(format!("scale must be finite and > 0, got {}", self.sigma)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::domain(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Degrees of freedom `m = 1/γ` (infinite at the normal corner).
    pub fn dof(&self) -> f64 {
        if self.gamma == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.gamma
        }
    }
}

/// `log c(γ)` of the reparameterised t density; `−½ log 2π` at `γ = 0`.
pub fn log_norm_const(gamma: f64) -> f64 {
    if gamma == 0.0 {
        return -LN_SQRT_2PI;
    }
    -LN_SQRT_2PI + ln_gamma_half_ratio_excess(0.5 / gamma)
}

/// `d/dγ log c(γ)`; the right limit `−¼` at `γ = 0`.
pub fn log_norm_const_deriv(gamma: f64) -> f64 {
    if gamma == 0.0 {
        return -0.25;
    }
    -ln_gamma_half_ratio_excess_deriv(0.5 / gamma) / (2.0 * gamma * gamma)
}

/// Log-density of the standardised residual `z` of the t family, without
/// the `−log σ` term. Written so that no `1/γ` appears.
pub(crate) fn t_log_kernel(z: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return norm_ln_pdf(z);
    }
    let u = z * z;
    let x = gamma * u;
    if x > 1.0 {
        // far tail: the expanded form below cancels badly
        return log_norm_const(gamma) - 0.5 * (1.0 + 1.0 / gamma) * x.ln_1p();
    }
    // (½ + 1/(2γ)) log(1+γu) = ½ log1p(x) + u/2 − γu² r(x)/2
    log_norm_const(gamma) - 0.5 * x.ln_1p() - 0.5 * u + 0.5 * gamma * u * u * log1p_remainder(x)
}

/// `log f(y, ξ, σ, γ)`.
pub fn t_log_density(y: f64, p: &TParams) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::domain(format!("observation must be finite, got {y}")));
    }
    p.validate()?;
    let z = (y - p.xi) / p.sigma;
    Ok(t_log_kernel(z, p.gamma) - p.sigma.ln())
}

pub fn t_density(y: f64, p: &TParams) -> Result<f64> {
    t_log_density(y, p).map(f64::exp)
}

/// Log-density together with its gradient in `(location, σ, γ)` at a
/// standardised residual `z`. The γ-derivative at `γ = 0` is the right
/// derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogDensityGrad {
    pub value: f64,
    pub d_loc: f64,
    pub d_sigma: f64,
    pub d_gamma: f64,
}

pub(crate) fn t_log_density_grad(z: f64, sigma: f64, gamma: f64) -> LogDensityGrad {
    let u = z * z;
    let x = gamma * u;
    let q = 1.0 + x;
    let value = t_log_kernel(z, gamma) - sigma.ln();
    let a = gamma + 1.0;
    let d_loc = a * z / (sigma * q);
    let d_sigma = (-1.0 + a * u / q) / sigma;
    let g = 0.5 * u * u * log1p_remainder(x);
    let d_gamma = log_norm_const_deriv(gamma) - (g + 0.5 * u / q - 0.5 * u * u / q);
    LogDensityGrad { value, d_loc, d_sigma, d_gamma }
}

/// `R(z) = z⁴/4 − z²/2 − 1/4`, the first-order γ-coefficient of the log-density.
#[inline]
pub fn penalty_r(z: f64) -> f64 {
    let u = z * z;
    0.25 * u * u - 0.5 * u - 0.25
}

/// `S(z) = z⁶/3 − z⁴/2`, minus twice the second-order γ-coefficient.
#[inline]
pub fn penalty_s(z: f64) -> f64 {
    let u = z * z;
    u * u * (u / 3.0 - 0.5)
}

/// Second-order expansion `log φ(z) + γR(z) − (γ²/2)S(z)` of the standardised t log-density.
pub fn log_density_expansion(z: f64, gamma: f64) -> f64 {
    norm_ln_pdf(z) + gamma * penalty_r(z) - 0.5 * gamma * gamma * penalty_s(z)
}

/// Degrees of freedom; `f64::INFINITY` means the normal limit.
fn check_dof(m: f64) -> Result<()> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::domain(format!("degrees of freedom must be > 0, got {m}")));
    }
    Ok(())
}

/// Lower-tail probability `P(T ≤ x)` for the t distribution with `m` degrees of freedom.
pub fn t_cdf(x: f64, m: f64) -> Result<f64> {
    check_dof(m)?;
    if x.is_nan() {
        return Err(Error::domain("t_cdf argument is NaN"));
    }
    if m.is_infinite() {
        return Ok(norm_cdf(x));
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = t_lower_tail_of_abs(x.abs(), m);
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Above this many degrees of freedom the incomplete-beta route loses
/// digits; integrate the density instead.
const LARGE_DOF: f64 = 100.0;

/// `P(T ≤ −|x|)`.
fn t_lower_tail_of_abs(ax: f64, m: f64) -> f64 {
    if m == 1.0 {
        return 0.5 - ax.atan() / PI;
    }
    if m > LARGE_DOF {
        let gamma = 1.0 / m;
        let dens = |t: f64| t_log_kernel(t, gamma).exp();
        let tol = Tolerance { abs: 1e-17, rel: 1e-15 };
        let r = if ax < 1.0 {
            integrate_breaks(dens, &[0.0, ax], tol).map(|r| 0.5 - r.value)
        } else {
            integrate_upper(dens, ax, tol).map(|r| r.value)
        };
        if let Ok(v) = r {
            return v;
        }
    }
    let x2 = ax * ax;
    if x2 < m {
        // I_{m/(m+x²)}(m/2, ½) is poorly conditioned near 1; use the complement
        let w = x2 / (m + x2);
        0.5 - 0.5 * beta_reg(0.5, 0.5 * m, w)
    } else {
        0.5 * beta_reg(0.5 * m, 0.5, m / (m + x2))
    }
}

fn t_log_pdf_std(x: f64, m: f64) -> f64 {
    if m.is_infinite() {
        norm_ln_pdf(x)
    } else {
        t_log_kernel(x, 1.0 / m)
    }
}

/// Quantile of the standard t distribution with `m` degrees of freedom.
pub fn t_quantile(p: f64, m: f64) -> Result<f64> {
    check_dof(m)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0,1), got {p}")));
    }
    if m.is_infinite() {
        return Ok(norm_quantile(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if m == 1.0 {
        return Ok((PI * (p - 0.5)).tan());
    }
    if m == 2.0 {
        return Ok((2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt());
    }
    // solve on the lower tail for accuracy; mirror at the end
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let target = |ax: f64| t_lower_tail_of_abs(ax, m) - q;
    let mut x = initial_t_quantile(q, m).abs();
    // bracket: target is decreasing in ax, positive at 0
    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while target(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain("t quantile bracket overflow"));
        }
    }
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = target(x);
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = t_log_pdf_std(x, m).exp();
        let mut next = x + f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(sign * x)
}

/// Cornish–Fisher expansion of the t quantile in `1/m` (lower-tail `q`).
fn initial_t_quantile(q: f64, m: f64) -> f64 {
    let z = norm_quantile(q);
    let z2 = z * z;
    let g1 = (z2 + 1.0) * z / 4.0;
    let g2 = ((5.0 * z2 + 16.0) * z2 + 3.0) * z / 96.0;
    let g3 = (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / 384.0;
    let g4 = ((((79.0 * z2 + 776.0) * z2 + 1482.0) * z2 - 1920.0) * z2 - 945.0) * z / 92160.0;
    let x = z + g1 / m + g2 / (m * m) + g3 / m.powi(3) + g4 / m.powi(4);
    if x.is_finite() && x < 0.0 {
        x
    } else {
        z
    }
}

/// Moments description of a normal scale mixture `N(0,1)/S` near `S = 1`:
/// `E S = 1 + k1 γ + …`, `E (S−1)² = k2 γ + …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub k1: f64,
    pub k2: f64,
}

impl MixtureSpec {
    /// The t family, `S = (χ²_m/m)^{1/2}` with `γ = 1/m`.
    pub const T: MixtureSpec = MixtureSpec { k1: -0.25, k2: 0.5 };

    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !k1.is_finite() || !(k2.is_finite() && k2 > 0.0) {
            return Err(Error::domain(format!("mixture needs finite k1 and k2 > 0, got ({k1}, {k2})")));
        }
        Ok(MixtureSpec { k1, k2 })
    }

    pub fn k3(&self) -> f64 {
        1.5 * self.k2 - self.k1
    }

    /// Variance `κ² = 1/(6 k2²)` of the limit variable `C`.
    pub fn kappa_squared(&self) -> f64 {
        1.0 / (6.0 * self.k2 * self.k2)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_squared().sqrt()
    }
}

/// First-order density perturbation `R(z) = ½k2(z⁴−6z²+3) + k3(z²−1)`.
pub fn mixture_r(z: f64, spec: &MixtureSpec) -> f64 {
    let u = z * z;
    0.5 * spec.k2 * (u * u - 6.0 * u + 3.0) + spec.k3() * (u - 1.0)
}

/// The quasi-t perturbation family `φ(z)(1 + γA(z))` with cut-off `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiT {
    c: f64,
    centering: f64,
}

/// `√6`, the smallest admissible cut-off.
pub const QUASI_T_MIN_CUTOFF: f64 = 2.449_489_742_783_178;

impl QuasiT {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= QUASI_T_MIN_CUTOFF - 1e-12) {
            return Err(Error::domain(format!("quasi-t cut-off must be >= sqrt(6), got {c}")));
        }
        Ok(QuasiT { c, centering: quasi_t_centering(c) })
    }

    pub fn cutoff(&self) -> f64 {
        self.c
    }

    /// The centering constant `a(c)`.
    pub fn centering(&self) -> f64 {
        self.centering
    }

    pub fn a(&self, z: f64) -> f64 {
        let t = z.abs().min(self.c);
        let u = t * t;
        0.25 * u * u - 0.5 * u - self.centering
    }

    /// `(min A, max A)` over the real line. `A` has critical values at
    /// `z = 0`, `±1` and is flat beyond `±c`.
    pub fn range(&self) -> (f64, f64) {
        let vals = [self.a(0.0), self.a(1.0), self.a(self.c)];
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Interval of γ for which `1 + γA(z) ≥ 0` everywhere.
    pub fn nonnegative_interval(&self) -> (f64, f64) {
        let (lo, hi) = self.range();
        (-1.0 / hi, -1.0 / lo)
    }

    /// `(∫z²φA, ∫z⁴φA)`.
    pub fn moment_shifts(&self) -> Result<(f64, f64)> {
        let m2 = self.integrate_against_phi(|z| z * z)?;
        let m4 = self.integrate_against_phi(|z| z.powi(4))?;
        Ok((m2, m4))
    }

    /// Right derivative of the kurtosis `E z⁴/(E z²)² − 3` at `γ = 0`.
    pub fn kurtosis_derivative(&self) -> Result<f64> {
        let (m2, m4) = self.moment_shifts()?;
        Ok(m4 - 6.0 * m2)
    }

    /// Kurtosis of the standardised quasi-t at `γ`.
    pub fn kurtosis(&self, gamma: f64) -> Result<f64> {
        let (m2, m4) = self.moment_shifts()?;
        let v = 1.0 + gamma * m2;
        Ok((3.0 + gamma * m4) / (v * v) - 3.0)
    }

    /// The γ interval on which the density is nonnegative and the kurtosis
    /// is increasing in γ (positive for γ > 0, negative for γ < 0).
    pub fn permissible_interval(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.nonnegative_interval();
        let (m2, m4) = self.moment_shifts()?;
        // d kurtosis/dγ ∝ (m4 − 6m2 − γ m2 m4)/(1 + γ m2)³
        let kurt_hi = (m4 - 6.0 * m2) / (m2 * m4);
        let var_lo = -1.0 / m2;
        Ok((lo.max(var_lo), hi.min(kurt_hi)))
    }

    /// `∫ g(z) φ(z) A(z) dz` for even `g`.
    pub fn integrate_against_phi<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let tol = Tolerance { abs: 1e-14, rel: 1e-13 };
        let core = integrate_breaks(|z| g(z) * norm_pdf(z) * self.a(z), &[0.0, 1.0, self.c], tol)?;
        let tail = integrate_upper(|z| g(z) * norm_pdf(z) * self.a(z), self.c, tol)?;
        Ok(2.0 * (core.value + tail.value))
    }

    pub fn density(&self, gamma: f64) -> Result<QuasiTDensity> {
        QuasiTDensity::new(*self, gamma)
    }
}

/// `a(c) = ¼ − (c³/2 + c/2)φ(c) + (c⁴/2 − c² − ½)(1 − Φ(c))`.
pub fn quasi_t_centering(c: f64) -> f64 {
    let c2 = c * c;
    0.25 - (0.5 * c2 * c + 0.5 * c) * norm_pdf(c) + (0.5 * c2 * c2 - c2 - 0.5) * norm_sf(c)
}

/// `A(z)` of the quasi-t family with cut-off `c`.
pub fn quasi_t_a(z: f64, c: f64) -> Result<f64> {
    Ok(QuasiT::new(c)?.a(z))
}

/// A member of the quasi-t family, validated to be a proper density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiTDensity {
    family: QuasiT,
    gamma: f64,
}

impl QuasiTDensity {
    pub fn new(family: QuasiT, gamma: f64) -> Result<Self> {
        let (lo, hi) = family.nonnegative_interval();
        if !gamma.is_finite() || gamma < lo || gamma > hi {
            return Err(Error::domain(format!(
                "gamma {gamma} outside the interval ({lo:.4}, {hi:.4}) where the quasi-t density is nonnegative"
            )));
        }
        Ok(QuasiTDensity { family, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log_density(&self, y: f64, xi: f64, sigma: f64) -> Result<f64> {
        if !y.is_finite() || !xi.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain("quasi-t density needs finite y, xi and sigma > 0"));
        }
        let z = (y - xi) / sigma;
        if self.gamma == 0.0 {
            return Ok(norm_ln_pdf(z) - sigma.ln());
        }
        Ok(norm_ln_pdf(z) + (1.0 + self.gamma * self.family.a(z)).ln() - sigma.ln())
    }
}

pub fn quasi_t_log_density(y: f64, xi: f64, sigma: f64, gamma: f64, c: f64) -> Result<f64> {
    QuasiT::new(c)?.density(gamma)?.log_density(y, xi, sigma)
}
