//! Null scores, information matrices, the bias/noise pair `(b, τ₀)` of an
//! estimand, and samplers for the limit variables.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::compromise::ARule;
use crate::densities::{penalty_r, MixtureSpec};
use crate::error::{Error, Result};
use crate::estimand::{Estimand, NullPoint, Partials};

/// Scores `(U, V, W)` of the wide model at `γ = 0` for standardised residual `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

pub fn score_at_null(z: f64, sigma0: f64) -> Scores {
    Scores { u: z / sigma0, v: (z * z - 1.0) / sigma0, w: penalty_r(z) }
}

/// Information matrix of `(ξ, σ, γ)` at the null.
#[rustfmt::skip]
pub fn info_wide(sigma0: f64) -> Matrix3<f64> {
    let s = sigma0;
    Matrix3::new(
        1.0 / (s * s), 0.0, 0.0,
        0.0, 2.0 / (s * s), 2.0 / s,
        0.0, 2.0 / s, 3.5,
    )
}

/// Closed-form inverse of [`info_wide`].
#[rustfmt::skip]
pub fn info_wide_inv(sigma0: f64) -> Matrix3<f64> {
    let s = sigma0;
    Matrix3::new(
        s * s, 0.0, 0.0,
        0.0, 7.0 / 6.0 * s * s, -2.0 / 3.0 * s,
        0.0, -2.0 / 3.0 * s, 2.0 / 3.0,
    )
}

fn check_d(d: &DMatrix<f64>) -> Result<()> {
    if !d.is_square() || d.nrows() == 0 {
        return Err(Error::domain("design matrix must be square and non-empty"));
    }
    Ok(())
}

/// `(p+2)×(p+2)` information of `(β, σ, γ)` for the regression model.
pub fn info_wide_regression(sigma0: f64, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_d(d)?;
    let p = d.nrows();
    let j3 = info_wide(sigma0);
    let mut j = DMatrix::zeros(p + 2, p + 2);
    j.view_mut((0, 0), (p, p)).copy_from(&(d / (sigma0 * sigma0)));
    for a in 0..2 {
        for b in 0..2 {
            j[(p + a, p + b)] = j3[(1 + a, 1 + b)];
        }
    }
    Ok(j)
}

pub fn info_wide_regression_inv(sigma0: f64, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_d(d)?;
    let p = d.nrows();
    let d_inv = d
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("design matrix is not positive definite".into()))?
        .inverse();
    let k3 = info_wide_inv(sigma0);
    let mut k = DMatrix::zeros(p + 2, p + 2);
    k.view_mut((0, 0), (p, p)).copy_from(&(d_inv * (sigma0 * sigma0)));
    for a in 0..2 {
        for b in 0..2 {
            k[(p + a, p + b)] = k3[(1 + a, 1 + b)];
        }
    }
    Ok(k)
}

/// Bias coefficient `b` and null standard deviation `τ₀` of an estimand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasNoise {
    pub b: f64,
    pub tau0: f64,
    pub partials: Partials,
}

pub fn bias_and_noise<E: Estimand + ?Sized>(e: &E, null: &NullPoint) -> Result<BiasNoise> {
    let p = e.partials(null)?;
    let s = null.sigma0;
    let b = s * p.d_sigma - p.d_gamma;
    let tau2 = (p.d_loc * p.d_loc * e.leverage() + 0.5 * p.d_sigma * p.d_sigma) * s * s;
    if !b.is_finite() || !tau2.is_finite() {
        return Err(Error::domain(format!("non-finite bias or variance for {}", e.name())));
    }
    Ok(BiasNoise { b, tau0: tau2.sqrt(), partials: p })
}

/// Family of alternatives; fixes `κ`, the standard deviation of the limit of `√n γ̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    T,
    Mixture(MixtureSpec),
}

impl ModelFamily {
    pub fn kappa(&self) -> f64 {
        match self {
            ModelFamily::T => (2.0f64 / 3.0).sqrt(),
            ModelFamily::Mixture(spec) => spec.kappa(),
        }
    }
}

/// The local alternative `γₙ = δ/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalModel {
    pub null: NullPoint,
    pub delta: f64,
    pub n: usize,
    pub family: ModelFamily,
}

impl LocalModel {
    pub fn new(null: NullPoint, delta: f64, n: usize, family: ModelFamily) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() || n == 0 {
            return Err(Error::domain(format!("need delta ≥ 0 and n ≥ 1, got ({delta}, {n})")));
        }
        Ok(LocalModel { null, delta, n, family })
    }

    /// `a = δ/κ`.
    pub fn a(&self) -> f64 {
        self.delta / self.family.kappa()
    }

    pub fn gamma_n(&self) -> f64 {
        self.delta / (self.n as f64).sqrt()
    }

    /// Degrees of freedom `√n/δ`; infinite at `δ = 0`.
    pub fn dof(&self) -> f64 {
        if self.delta == 0.0 {
            f64::INFINITY
        } else {
            (self.n as f64).sqrt() / self.delta
        }
    }
}

/// Draw of `(A, B, C) ∼ N₃(0, J_wide⁻¹)`.
pub fn sample_limit_triple<R: Rng + ?Sized>(sigma0: f64, rng: &mut R) -> Vector3<f64> {
    // lower Cholesky factor of info_wide_inv, in closed form
    let s = sigma0;
    let l11 = (7.0f64 / 6.0).sqrt() * s;
    let l21 = -(2.0 / 3.0) * s / l11;
    let l22 = (2.0 / 3.0 - l21 * l21).sqrt();
    let z: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    Vector3::new(s * z[0], l11 * z[1], l21 * z[1] + l22 * z[2])
}

/// One draw of the limit `Λ` of `√n(μ* − μ_true)` under the t family.
pub fn sample_lambda<E: Estimand + ?Sized, R: Rng + ?Sized>(
    e: &E,
    null: &NullPoint,
    delta: f64,
    rule: &ARule,
    rng: &mut R,
) -> Result<f64> {
    let bn = bias_and_noise(e, null)?;
    Ok(sample_lambda_from(&bn, null, delta, rule, rng))
}

/// [`sample_lambda`] with `(b, τ₀)` computed once by the caller.
pub fn sample_lambda_from<R: Rng + ?Sized>(bn: &BiasNoise, null: &NullPoint, delta: f64, rule: &ARule, rng: &mut R) -> f64 {
    let kappa = ModelFamily::T.kappa();
    let a = delta / kappa;
    let abc = sample_limit_triple(null.sigma0, rng);
    let (ca, cb, cc) = (abc[0], abc[1], abc[2]);
    let p = bn.partials;
    let s = null.sigma0;
    let t = a + cc / kappa;
    let narrow = bn.b * delta + p.d_loc * ca + p.d_sigma * (cb + s * cc);
    if t <= 0.0 {
        // both branches coincide where T ≤ 0
        return narrow;
    }
    let wide = p.d_loc * ca + p.d_sigma * cb + p.d_gamma * cc;
    let w = rule.weight(t);
    (1.0 - w) * narrow + w * wide
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimand::{MeanAbsDev, Probability, Quantile, StdDev};
    use crate::special::PHI0;

    #[test]
    fn score_examples() {
        let s = score_at_null(0.0, 2.0);
        assert_eq!((s.u, s.v, s.w), (0.0, -0.5, -0.25));
        let s = score_at_null(1.0, 1.0);
        assert_eq!((s.u, s.v, s.w), (1.0, 0.0, -0.5));
    }

    #[test]
    fn info_inverse_identity() {
        for &s in &[0.3, 1.0, 4.0] {
            let prod = info_wide(s) * info_wide_inv(s);
            assert!((prod - Matrix3::identity()).abs().max() < 1e-12);
        }
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let prod = info_wide_regression(1.5, &d).unwrap() * info_wide_regression_inv(1.5, &d).unwrap();
        assert!((prod - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn builtin_bias_noise() {
        let null = NullPoint::new(0.0, 2.0).unwrap();
        let bn = bias_and_noise(&crate::estimand::Mean, &null).unwrap();
        assert_eq!((bn.b, bn.tau0), (0.0, 2.0));
        let bn = bias_and_noise(&MeanAbsDev, &null).unwrap();
        assert!((bn.b - 0.5 * 2.0 * PHI0).abs() < 1e-15);
        assert!((bn.tau0 * bn.tau0 - 2.0 * PHI0 * PHI0 * 4.0).abs() < 1e-15);
        assert_eq!(bias_and_noise(&StdDev, &null).unwrap().b, 0.0);
        let q = bias_and_noise(&Quantile::new(0.5).unwrap(), &null).unwrap();
        assert!(q.b.abs() < 1e-15);
        let pr = bias_and_noise(&Probability::new(0.0).unwrap(), &null).unwrap();
        assert!(pr.b.abs() < 1e-15);
    }

    #[test]
    fn mad_bias_scales_with_sigma() {
        let b1 = bias_and_noise(&MeanAbsDev, &NullPoint::new(0.0, 1.0).unwrap()).unwrap().b;
        let b3 = bias_and_noise(&MeanAbsDev, &NullPoint::new(0.0, 3.0).unwrap()).unwrap().b;
        assert!((b3 - 3.0 * b1).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reproduces_inverse() {
        let s: f64 = 1.7;
        let l11 = (7.0f64 / 6.0).sqrt() * s;
        let l21 = -(2.0 / 3.0) * s / l11;
        let l22 = (2.0 / 3.0 - l21 * l21).sqrt();
        let k = info_wide_inv(s);
        assert!((l11 * l11 - k[(1, 1)]).abs() < 1e-14);
        assert!((l11 * l21 - k[(1, 2)]).abs() < 1e-14);
        assert!((l21 * l21 + l22 * l22 - k[(2, 2)]).abs() < 1e-14);
    }
}
