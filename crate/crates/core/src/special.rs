//! Standard normal functions and Gamma-function helpers shared by the
//! density, risk and estimand code.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::{erf, gamma};


/// `ln(2π)/2`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `φ(0) = 1/√(2π)`.
pub const PHI0: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    PHI0 * (-0.5 * z * z).exp()
}

#[inline]
pub fn norm_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `Φ(z)`, computed through `erfc` so both tails keep relative accuracy.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `1 − Φ(z)`.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`; returns ±∞ at the endpoints and NaN outside.
pub fn norm_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    // one Newton step on Φ(x) − p
    let d = norm_pdf(x);
    if d > 0.0 {
        let r = if p < 0.5 {
            norm_cdf(x) - p
        } else {
            (1.0 - p) - norm_sf(x)
        };
        x -= r / d;
    }
    x
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// `lnΓ(x + ½) − lnΓ(x) − ½ ln x` for `x > 0`.
///
/// Large arguments use the asymptotic series, which avoids the cancellation
/// between two huge log-Gamma values.
pub fn ln_gamma_half_ratio_excess(x: f64) -> f64 {
    if x >= 10.0 {
        let u = 1.0 / x;
        let u2 = u * u;
        // coefficients of x^-1, x^-3, ..., x^-13
        const C: [f64; 7] = [
            -1.0 / 8.0,
            1.0 / 192.0,
            -1.0 / 640.0,
            17.0 / 14336.0,
            -31.0 / 18432.0,
            691.0 / 180224.0,
            -5461.0 / 425984.0,
        ];
        let mut acc = 0.0;
        for c in C.iter().rev() {
            acc = acc * u2 + c;
        }
        acc * u
    } else {
        ln_gamma(x + 0.5) - ln_gamma(x) - 0.5 * x.ln()
    }
}

/// Derivative of [`ln_gamma_half_ratio_excess`] with respect to `x`.
pub fn ln_gamma_half_ratio_excess_deriv(x: f64) -> f64 {
    if x >= 10.0 {
        let u = 1.0 / x;
        let u2 = u * u;
        // d/dx of c_k x^-(2k+1) = -(2k+1) c_k x^-(2k+2)
        const C: [f64; 7] = [
            -1.0 / 8.0,
            1.0 / 192.0,
            -1.0 / 640.0,
            17.0 / 14336.0,
            -31.0 / 18432.0,
            691.0 / 180224.0,
            -5461.0 / 425984.0,
        ];
        let mut acc = 0.0;
        for (k, c) in C.iter().enumerate().rev() {
            acc = acc * u2 - (2 * k + 1) as f64 * c;
        }
        acc * u2
    } else {
        digamma(x + 0.5) - digamma(x) - 0.5 / x
    }
}

/// `(x − ln(1+x)) / x²`, stable near zero.
pub fn log1p_remainder(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        // Σ_{k≥0} (−x)^k / (k+2), truncated after x⁸
        let mut acc = 0.0;
        for k in (0..=8).rev() {
            acc = acc * -x + 1.0 / (k + 2) as f64;
        }
        acc
    } else {
        (x - x.ln_1p()) / (x * x)
    }
}

/// `1/π`.
pub const FRAC_1_PI: f64 = 1.0 / PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_round_trip() {
        for &p in &[1e-10, 0.001, 0.025, 0.3, 0.5, 0.75, 0.975, 0.999_999] {
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() < 1e-15 + 1e-13 * p, "p={p}");
        }
        assert!((norm_quantile(0.75) - 0.674_489_750_196_081_7).abs() < 1e-14);
    }

    #[test]
    fn half_ratio_branches_meet() {
        // mpmath: lnΓ(10.5) − lnΓ(10) − ½ ln 10
        assert!((ln_gamma_half_ratio_excess(10.0) + 0.012_494_807_174_728_820).abs() < 1e-16);
        let direct = ln_gamma(10.5) - ln_gamma(10.0) - 0.5 * 10f64.ln();
        assert!((ln_gamma_half_ratio_excess(10.0) - direct).abs() < 1e-13);
        let h = 1e-5;
        for &x in &[2.0, 9.9, 10.0, 40.0] {
            let fd = (ln_gamma_half_ratio_excess(x + h) - ln_gamma_half_ratio_excess(x - h)) / (2.0 * h);
            assert!((ln_gamma_half_ratio_excess_deriv(x) - fd).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn log1p_remainder_is_continuous() {
        for &x in &[-9.99e-3, 0.5e-2, 9.99e-3] {
            let direct = (x - f64::ln_1p(x)) / (x * x);
            assert!((log1p_remainder(x) - direct).abs() < 1e-11, "x={x}");
        }
        assert!((log1p_remainder(0.0) - 0.5).abs() < 1e-16);
    }
}
