//! Maximum-likelihood fitting of the narrow (normal) and wide (t) models.
//!
//! The wide fit is a projected Newton ascent in `(β, log σ, γ)` with
//! `γ ∈ [0, γ_max]`. The lower bound is an active constraint, so the
//! optimizer can land on the corner `γ = 0` exactly rather than approach it.
//!
//! Both models are fitted to residuals standardised by the narrow fit and
//! mapped back afterwards, which makes the fits affine-equivariant up to
//! rounding.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::densities::{penalty_r, penalty_s, t_log_density_grad, t_log_kernel, TParams};
use crate::error::{Error, Result};
use crate::special::LN_SQRT_2PI;

/// Output of a maximum-likelihood fit.
///
/// `beta` holds the location for i.i.d. fits (length 1) or the regression
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub gamma: f64,
    pub loglik: f64,
    pub at_corner: bool,
    pub n_iter: usize,
    pub converged: bool,
}

impl FitResult {
    /// Location of an i.i.d. fit (the first coefficient for regression).
    pub fn xi(&self) -> f64 {
        self.beta[0]
    }

    pub fn params(&self) -> TParams {
        TParams { xi: self.xi(), sigma: self.sigma, gamma: self.gamma }
    }

    /// Implied degrees of freedom `1/γ̂`, infinite at the corner.
    pub fn dof(&self) -> f64 {
        if self.gamma == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.gamma
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Sup-norm bound on the projected gradient of the mean log-likelihood.
    pub grad_tol: f64,
    pub gamma_max: f64,
    /// Loglik gain over the corner below which the corner is reported.
    pub corner_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iter: 500, grad_tol: 1e-8, gamma_max: 2.0, corner_tol: 1e-9 }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.grad_tol > 0.0) || !(self.gamma_max > 0.0) || !(self.corner_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!("bad fit options {self:?}")));
        }
        Ok(())
    }
}

/// Covariate matrix of a linear model together with `Dₙ = X′X/n`.
#[derive(Debug, Clone)]
pub struct RegressionDesign {
    x: DMatrix<f64>,
    d: DMatrix<f64>,
    d_inv: DMatrix<f64>,
    intercept_only: bool,
}

impl RegressionDesign {
    /// `x` is `n × p`, one row per observation.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 || n == 0 {
            return Err(Error::InsufficientData(format!("design is {n}×{p}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("design contains non-finite entries"));
        }
        let d = x.transpose() * &x / n as f64;
        let chol = d
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("design matrix Dₙ is not positive definite".into()))?;
        let d_inv = chol.inverse();
        let intercept_only = p == 1 && x.iter().all(|&v| v == 1.0);
        Ok(RegressionDesign { x, d, d_inv, intercept_only })
    }

    /// Column of ones: the i.i.d. location model.
    pub fn intercept(n: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(n, 1, 1.0))
    }

    /// Prepends an intercept column to `covariates` (`n × k`).
    pub fn with_intercept(covariates: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = covariates.shape();
        let mut x = DMatrix::from_element(n, k + 1, 1.0);
        x.view_mut((0, 1), (n, k)).copy_from(covariates);
        Self::new(x)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn d_matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn d_inverse(&self) -> &DMatrix<f64> {
        &self.d_inv
    }

    /// Leverage `x′Dₙ⁻¹x` of a covariate vector.
    pub fn leverage(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.p() {
            return Err(Error::domain(format!("covariate vector has length {}, expected {}", x.len(), self.p())));
        }
        let v = DVector::from_column_slice(x);
        Ok((v.transpose() * &self.d_inv * &v)[(0, 0)])
    }

    fn row_dot(&self, i: usize, b: &[f64]) -> f64 {
        if self.intercept_only {
            return b[0];
        }
        b.iter().enumerate().map(|(j, bj)| self.x[(i, j)] * bj).sum()
    }
}

fn check_data(y: &[f64], min_n: usize) -> Result<()> {
    if y.len() < min_n {
        return Err(Error::InsufficientData(format!("need at least {min_n} observations, got {}", y.len())));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("observation must be finite, got {v}")));
    }
    Ok(())
}

fn normal_loglik(n: usize, sigma: f64) -> f64 {
    let n = n as f64;
    -n * (LN_SQRT_2PI + sigma.ln() + 0.5)
}

fn narrow_from_coefficients(design: &RegressionDesign, y: &[f64], beta: Vec<f64>) -> Result<FitResult> {
    let n = y.len();
    let rss: f64 = (0..n).map(|i| (y[i] - design.row_dot(i, &beta)).powi(2)).sum();
    let sigma = (rss / n as f64).sqrt();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(sigma > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("residual variance is zero".into()));
    }
    Ok(FitResult {
        beta,
        sigma,
        gamma: 0.0,
        loglik: normal_loglik(n, sigma),
        at_corner: true,
        n_iter: 0,
        converged: true,
    })
}

/// Normal ML fit: the sample mean and the divisor-`n` standard deviation.
pub fn fit_narrow(data: &[f64]) -> Result<FitResult> {
    check_data(data, 2)?;
    let design = RegressionDesign::intercept(data.len())?;
    fit_narrow_regression(&design, data)
}

/// Least squares with `σ̂² = RSS/n`.
pub fn fit_narrow_regression(design: &RegressionDesign, y: &[f64]) -> Result<FitResult> {
    if y.len() != design.n() {
        return Err(Error::domain(format!("{} responses for a design with {} rows", y.len(), design.n())));
    }
    check_data(y, design.p() + 1)?;
    let beta = if design.intercept_only {
        vec![y.iter().sum::<f64>() / y.len() as f64]
    } else {
        let yv = DVector::from_column_slice(y);
        let xty = design.x.transpose() * yv / y.len() as f64;
        (&design.d_inv * xty).iter().copied().collect()
    };
    narrow_from_coefficients(design, y, beta)
}

/// The t-model likelihood on residuals standardised by the narrow fit.
struct WideProblem<'a> {
    design: &'a RegressionDesign,
    r: Vec<f64>,
}

/// Mean log-likelihood and gradient in `θ = (b, s, γ)`, `σ' = eˢ`.
struct Eval {
    value: f64,
    grad: Vec<f64>,
}

impl WideProblem<'_> {
    fn dim(&self) -> usize {
        self.design.p() + 2
    }

    fn value(&self, th: &[f64]) -> f64 {
        let p = self.design.p();
        let (sig, gamma) = (th[p].exp(), th[p + 1]);
        let n = self.r.len() as f64;
        let mut acc = 0.0;
        for (i, ri) in self.r.iter().enumerate() {
            let z = (ri - self.design.row_dot(i, &th[..p])) / sig;
            acc += t_log_kernel(z, gamma);
        }
        acc / n - th[p]
    }

    fn eval(&self, th: &[f64]) -> Eval {
        let p = self.design.p();
        let (sig, gamma) = (th[p].exp(), th[p + 1]);
        let n = self.r.len() as f64;
        let mut value = 0.0;
        let mut grad = vec![0.0; p + 2];
        for (i, ri) in self.r.iter().enumerate() {
            let z = (ri - self.design.row_dot(i, &th[..p])) / sig;
            let g = t_log_density_grad(z, sig, gamma);
            value += g.value;
            if self.design.intercept_only {
                grad[0] += g.d_loc;
            } else {
                for (j, gj) in grad.iter_mut().take(p).enumerate() {
                    *gj += g.d_loc * self.design.x[(i, j)];
                }
            }
            grad[p] += g.d_sigma * sig;
            grad[p + 1] += g.d_gamma;
        }
        grad.iter_mut().for_each(|v| *v /= n);
        Eval { value: value / n, grad }
    }

    /// Finite-difference Hessian of the analytic gradient. The γ column is
    /// differenced forwards near the boundary.
    fn hessian(&self, th: &[f64], g0: &[f64]) -> DMatrix<f64> {
        let k = self.dim();
        let mut h = DMatrix::zeros(k, k);
        let mut t = th.to_vec();
        for j in 0..k {
            let step = 1e-5 * th[j].abs().max(1.0);
            let col: Vec<f64> = if j == k - 1 && th[j] < step {
                t[j] = th[j] + step;
                let gp = self.eval(&t).grad;
                gp.iter().zip(g0).map(|(a, b)| (a - b) / step).collect()
            } else {
                t[j] = th[j] + step;
                let gp = self.eval(&t).grad;
                t[j] = th[j] - step;
                let gm = self.eval(&t).grad;
                gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
            };
            t[j] = th[j];
            for i in 0..k {
                h[(i, j)] = col[i];
            }
        }
        (&h + h.transpose()) * 0.5
    }
}

struct Ascent {
    theta: Vec<f64>,
    value: f64,
    n_iter: usize,
    converged: bool,
}

/// Projected Newton ascent. `gamma_fixed` pins γ (profile likelihood).
fn ascend(prob: &WideProblem, start: Vec<f64>, opts: &FitOptions, gamma_fixed: bool) -> Ascent {
    let k = prob.dim();
    let gi = k - 1;
    let clamp = |v: f64| v.clamp(0.0, opts.gamma_max);
    let mut theta = start;
    theta[gi] = clamp(theta[gi]);
    let mut cur = prob.eval(&theta);
    for iter in 0..opts.max_iter {
        // free coordinates: γ leaves the set when pinned or pushing against a bound
        let g = &cur.grad;
        let gamma_active = gamma_fixed
            || (theta[gi] <= 0.0 && g[gi] <= 0.0)
            || (theta[gi] >= opts.gamma_max && g[gi] >= 0.0);
        let free: Vec<usize> = (0..k).filter(|&j| j != gi || !gamma_active).collect();
        let sup = free.iter().fold(0.0f64, |m, &j| m.max(g[j].abs()));
        if sup < opts.grad_tol {
            return Ascent { theta, value: cur.value, n_iter: iter, converged: true };
        }
        let h = prob.hessian(&theta, g);
        let m = free.len();
        let neg_h = DMatrix::from_fn(m, m, |a, b| -h[(free[a], free[b])]);
        let gf = DVector::from_fn(m, |a, _| g[free[a]]);
        let dir = newton_direction(neg_h, &gf);

        if sup < 1e3 * opts.grad_tol {
            // the value is flat to rounding here; steer by the gradient norm
            let mut t = theta.clone();
            for (a, &j) in free.iter().enumerate() {
                t[j] += dir[a];
            }
            t[gi] = clamp(t[gi]);
            let e = prob.eval(&t);
            let sup_new = free.iter().fold(0.0f64, |m, &j| m.max(e.grad[j].abs()));
            if !(e.value.is_finite() && sup_new < 0.5 * sup) || t == theta {
                return Ascent { theta, value: cur.value, n_iter: iter + 1, converged: true };
            }
            cur = e;
            theta = t;
            continue;
        }
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..50 {
            let mut t = theta.clone();
            for (a, &j) in free.iter().enumerate() {
                t[j] += alpha * dir[a];
            }
            t[gi] = clamp(t[gi]);
            let slope: f64 = (0..k).map(|j| g[j] * (t[j] - theta[j])).sum();
            let v = prob.value(&t);
            if v.is_finite() && v >= cur.value + 1e-4 * slope {
                accepted = Some(t);
                break;
            }
            alpha *= 0.5;
        }
        let next = match accepted {
            Some(t) => t,
            None => {
                // flat to rounding: accept the full step when it shrinks the gradient
                let mut t = theta.clone();
                for (a, &j) in free.iter().enumerate() {
                    t[j] += dir[a];
                }
                t[gi] = clamp(t[gi]);
                let e = prob.eval(&t);
                let sup_new = free.iter().fold(0.0f64, |m, &j| m.max(e.grad[j].abs()));
                if e.value.is_finite() && sup_new < sup && e.value >= cur.value - 1e-14 * cur.value.abs().max(1.0) {
                    t
                } else {
                    return Ascent { theta, value: cur.value, n_iter: iter + 1, converged: sup < 1e3 * opts.grad_tol };
                }
            }
        };
        if next == theta {
            // the step rounds away entirely
            return Ascent { theta, value: cur.value, n_iter: iter + 1, converged: sup < 1e3 * opts.grad_tol };
        }
        cur = prob.eval(&next);
        theta = next;
    }
    let g = &cur.grad;
    let gamma_active = gamma_fixed || (theta[gi] <= 0.0 && g[gi] <= 0.0);
    let sup = (0..k).filter(|&j| j != gi || !gamma_active).fold(0.0f64, |m, j| m.max(g[j].abs()));
    Ascent { converged: sup < opts.grad_tol, theta, value: cur.value, n_iter: opts.max_iter }
}

/// Solves `(−H) d = g`, regularising `−H` until it is positive definite.
fn newton_direction(neg_h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let m = neg_h.nrows();
    let scale = (0..m).map(|i| neg_h[(i, i)].abs()).fold(1e-8, f64::max);
    let mut lambda = 0.0;
    for _ in 0..60 {
        let a = &neg_h + DMatrix::identity(m, m) * lambda;
        if let Some(ch) = a.cholesky() {
            let d = ch.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        lambda = if lambda == 0.0 { 1e-8 * scale } else { lambda * 10.0 };
    }
    g / scale
}

/// t-model ML fit of an i.i.d. sample.
pub fn fit_wide(data: &[f64], opts: &FitOptions) -> Result<FitResult> {
    check_data(data, 4)?;
    let design = RegressionDesign::intercept(data.len())?;
    fit_wide_regression(&design, data, opts)
}

/// Joint ML over `(β, σ, γ ≥ 0)` for the linear model with t errors.
pub fn fit_wide_regression(design: &RegressionDesign, y: &[f64], opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    check_data(y, design.p() + 3)?;
    let narrow = fit_narrow_regression(design, y)?;
    let n = y.len();
    let p = design.p();
    let r: Vec<f64> = (0..n).map(|i| (y[i] - design.row_dot(i, &narrow.beta)) / narrow.sigma).collect();
    let prob = WideProblem { design, r };

    let warm = one_step_from_residuals(&prob.r).gamma.min(opts.gamma_max);
    let mut start = vec![0.0; p + 2];
    start[p + 1] = warm;
    let run = ascend(&prob, start, opts, false);

    let corner_value = prob.value(&vec![0.0; p + 2]);
    let to_original = |th: &[f64], value: f64, n_iter: usize, converged: bool| {
        let beta: Vec<f64> = (0..p).map(|j| narrow.beta[j] + narrow.sigma * th[j]).collect();
        let sigma = narrow.sigma * th[p].exp();
        FitResult {
            beta,
            sigma,
            gamma: th[p + 1],
            loglik: n as f64 * (value - narrow.sigma.ln()),
            at_corner: false,
            n_iter,
            converged,
        }
    };

    if run.theta[p + 1] == 0.0 || (run.value - corner_value) * (n as f64) < opts.corner_tol {
        return Ok(FitResult { n_iter: run.n_iter, converged: true, ..narrow });
    }
    let fit = to_original(&run.theta, run.value, run.n_iter, run.converged);
    if !run.converged {
        return Err(Error::NonConvergence { iterations: run.n_iter, best: Box::new(fit) });
    }
    Ok(fit)
}

/// Profile log-likelihood `max_{ξ,σ} Σ log f(yᵢ, ξ, σ, γ)` at a fixed `γ`.
pub fn profile_loglik(data: &[f64], gamma: f64) -> Result<f64> {
    check_data(data, 4)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("gamma must be finite and ≥ 0, got {gamma}")));
    }
    let design = RegressionDesign::intercept(data.len())?;
    let narrow = fit_narrow_regression(&design, data)?;
    let r: Vec<f64> = data.iter().map(|y| (y - narrow.xi()) / narrow.sigma).collect();
    let prob = WideProblem { design: &design, r };
    let opts = FitOptions { gamma_max: gamma.max(1e-300), ..FitOptions::default() };
    let run = ascend(&prob, vec![0.0, 0.0, gamma], &opts, true);
    Ok(data.len() as f64 * (run.value - narrow.sigma.ln()))
}

/// One-step estimate of `γ` from the expansion of the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStep {
    pub gamma: f64,
    /// `ΣS ≤ 0`: the parabola opens the wrong way and 0 is returned.
    pub anomaly: bool,
}

fn one_step_from_residuals(z: &[f64]) -> OneStep {
    let (sr, ss) = z.iter().fold((0.0, 0.0), |(a, b), &zi| (a + penalty_r(zi), b + penalty_s(zi)));
    if ss <= 0.0 {
        return OneStep { gamma: 0.0, anomaly: true };
    }
    OneStep { gamma: (sr / ss).max(0.0), anomaly: false }
}

/// `max(0, ΣR(ẑᵢ)/ΣS(ẑᵢ))` with `ẑᵢ = (yᵢ − ξ̂)/σ̂`.
pub fn one_step_gamma(data: &[f64], xi_hat: f64, sigma_hat: f64) -> Result<OneStep> {
    check_data(data, 1)?;
    if !(sigma_hat > 0.0) {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma_hat}")));
    }
    let z: Vec<f64> = data.iter().map(|y| (y - xi_hat) / sigma_hat).collect();
    Ok(one_step_from_residuals(&z))
}

/// Switch statistic `Δₙ = −⅔σ₀√n V̄ₙ + ⅔√n W̄ₙ`; its sign predicts `γ̂ > 0`.
pub fn delta_switch(data: &[f64], xi0: f64, sigma0: f64) -> Result<f64> {
    check_data(data, 1)?;
    if !(sigma0 > 0.0) {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma0}")));
    }
    let n = data.len() as f64;
    let (mut v, mut w) = (0.0, 0.0);
    for y in data {
        let z = (y - xi0) / sigma0;
        v += (z * z - 1.0) / sigma0;
        w += penalty_r(z);
    }
    let (vbar, wbar) = (v / n, w / n);
    Ok(n.sqrt() * (2.0 / 3.0) * (wbar - sigma0 * vbar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn narrow_examples() {
        let f = fit_narrow(&[0.0, 2.0]).unwrap();
        assert_eq!(f.xi(), 1.0);
        assert!((f.sigma - 1.0).abs() < 1e-15);
        assert!(f.at_corner && f.gamma == 0.0);
        let f = fit_narrow(&[-1.0, 0.0, 1.0]).unwrap();
        assert!(f.xi().abs() < 1e-15);
        assert!((f.sigma - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(matches!(fit_narrow(&[3.0, 3.0, 3.0]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_narrow(&[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn design_rejects_collinear_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(RegressionDesign::new(x), Err(Error::Singular(_))));
    }

    #[test]
    fn exact_linear_response_is_degenerate() {
        let cov = DMatrix::from_column_slice(5, 1, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let d = RegressionDesign::with_intercept(&cov).unwrap();
        let y = [1.0, 3.0, 5.0, 7.0, 9.0];
        assert!(matches!(fit_narrow_regression(&d, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn light_tails_sit_at_corner() {
        let data = [-1.0, -1.0, 1.0, 1.0, -1.0, 1.0].map(|v| 3.0 * v + 2.0);
        let os = fit_narrow(&data).and_then(|f| one_step_gamma(&data, f.xi(), f.sigma)).unwrap();
        assert_eq!(os.gamma, 0.0);
        let w = fit_wide(&data, &FitOptions::default()).unwrap();
        assert!(w.at_corner && w.gamma == 0.0);
        assert_eq!(w.beta, fit_narrow(&data).unwrap().beta);
    }

    #[test]
    fn heavy_tails_leave_corner() {
        let data = [-8.0, -1.0, -0.5, -0.2, 0.0, 0.1, 0.3, 0.6, 1.2, 9.0];
        let w = fit_wide(&data, &FitOptions::default()).unwrap();
        assert!(!w.at_corner && w.gamma > 0.0 && w.converged);
        let nar = fit_narrow(&data).unwrap();
        assert!(w.loglik > nar.loglik);
        for k in 0..=20 {
            let g = k as f64 * 0.1;
            assert!(profile_loglik(&data, g).unwrap() <= w.loglik + 1e-6, "gamma {g}");
        }
    }

    #[test]
    fn delta_switch_at_zero_residuals() {
        let n = 16;
        let d = delta_switch(&vec![5.0; n], 5.0, 2.0).unwrap();
        assert!((d - 0.5 * (n as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn one_step_flags_anomaly() {
        // all residuals at ±1: ΣS < 0
        let os = one_step_gamma(&[-1.0, 1.0], 0.0, 1.0).unwrap();
        assert!(os.anomaly && os.gamma == 0.0);
    }
}
