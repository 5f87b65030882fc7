//! Standard normal primitives and the lower-tail scale functions built on them.
//!
//! The unchecked functions (`cdf`, `pdf`, `quantile`, `tail_psi`) are meant for
//! inner loops. The `normal_*` and named functions validate their inputs.

use crate::error::{domain, Error, Result};

pub const SQRT_2: f64 = core::f64::consts::SQRT_2;
pub const SQRT_PI: f64 = 1.772_453_850_905_516;
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this point the CDF switches to the continued fraction for the tail.
const FAR_TAIL: f64 = -38.0;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal distribution function. NaN propagates.
#[inline]
pub fn cdf(x: f64) -> f64 {
    if x < FAR_TAIL {
        far_lower_tail(x)
    } else {
        0.5 * libm::erfc(-x / SQRT_2)
    }
}

/// Continued fraction Q(t) = φ(t) / (t + 1/(t + 2/(t + 3/(t + ...)))) for t = -x.
fn far_lower_tail(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let t = -x;
    let mut frac = t;
    for k in (1..=24).rev() {
        frac = t + k as f64 / frac;
    }
    libm::exp(-0.5 * t * t - LN_SQRT_2PI - libm::log(frac))
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

// Rational seed for 0 < p <= 1/2, relative error about 1e-9.
fn acklam_lower(p: f64) -> f64 {
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

fn quantile_lower(p: f64) -> f64 {
    let mut x = acklam_lower(p);
    for _ in 0..2 {
        let dens = pdf(x);
        if dens == 0.0 {
            break;
        }
        x -= (cdf(x) - p) / dens;
    }
    x
}

/// Inverse of [`cdf`]. Returns -inf at 0, +inf at 1 and NaN outside [0, 1].
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        quantile_lower(p)
    } else {
        // 1 - p is exact for p >= 1/2.
        -quantile_lower(1.0 - p)
    }
}

/// Tail transfer Ψ(u) = Φ(√2 Φ⁻¹(u)) without argument checks.
#[inline]
pub fn tail_psi(u: f64) -> f64 {
    cdf(SQRT_2 * quantile(u))
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(name, p, "(0, 1)"))
    }
}

pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite { name: "x", value: x });
    }
    Ok(cdf(x))
}

pub fn normal_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite { name: "x", value: x });
    }
    Ok(pdf(x))
}

pub fn normal_quantile(p: f64) -> Result<f64> {
    check_prob("p", p)?;
    Ok(quantile(p))
}

/// Elementary two-sided bounds on the upper tail 1 - Φ(x):
/// `x/(1+x²)·φ(x) ≤ 1-Φ(x) ≤ φ(x)/x`.
pub fn mills_interval(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::NonFinite { name: "x", value: x });
    }
    if x <= 0.0 {
        return Err(domain("x", x, "(0, inf)"));
    }
    let d = pdf(x);
    Ok((x / (1.0 + x * x) * d, d / x))
}

/// Ψ(u) = Φ(√2 Φ⁻¹(u)), the lower-tail probability of an N(0, 1/2) variable
/// at the quantile level of u.
pub fn psi(u: f64) -> Result<f64> {
    check_prob("u", u)?;
    Ok(tail_psi(u))
}

/// Two-term small-u expansion √π u² (s + 3/(2s)) with s = -Φ⁻¹(u).
pub fn psi_refined(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 0.5) {
        return Err(domain("u", u, "(0, 1/2)"));
    }
    let s = -quantile(u);
    Ok(SQRT_PI * u * u * (s + 1.5 / s))
}

/// Logarithmic scales attached to the level x/n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailScale {
    /// -Φ⁻¹(x/n)
    pub s: f64,
    /// log(n/x)
    pub big_l: f64,
    /// 1 + max(log(n/x), 0)
    pub ell: f64,
}

pub fn tail_scale(n: u64, x: f64) -> Result<TailScale> {
    if n < 2 {
        return Err(domain("n", n as f64, "[2, inf)"));
    }
    let nf = n as f64;
    if !(x > 0.0 && x < nf) {
        return Err(domain("x", x, "(0, n)"));
    }
    let big_l = libm::log(nf / x);
    Ok(TailScale {
        s: -quantile(x / nf),
        big_l,
        ell: 1.0 + big_l.max(0.0),
    })
}

/// Quantile scales of a pair of levels u ≤ v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileGap {
    /// -Φ⁻¹(u)
    pub s: f64,
    /// -Φ⁻¹(v)
    pub t: f64,
    /// s - t
    pub h: f64,
}

pub fn quantile_gap(u: f64, v: f64) -> Result<QuantileGap> {
    check_prob("u", u)?;
    check_prob("v", v)?;
    if u > v {
        return Err(Error::Invalid("quantile_gap requires u <= v"));
    }
    Ok(gap_unchecked(u, v))
}

#[inline]
pub(crate) fn gap_unchecked(u: f64, v: f64) -> QuantileGap {
    let s = -quantile(u);
    let t = -quantile(v);
    QuantileGap {
        s,
        t,
        h: (s - t).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_is_continuous_across_the_tail_switch() {
        let below = cdf(FAR_TAIL - 1e-12);
        let above = cdf(FAR_TAIL + 1e-12);
        assert!(((below - above) / above).abs() < 1e-9);
    }

    #[test]
    fn quantile_endpoints() {
        assert_eq!(quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(quantile(1.0), f64::INFINITY);
        assert!(quantile(1.5).is_nan());
        assert_eq!(quantile(0.5), 0.0);
    }

    #[test]
    fn far_tail_matches_reference() {
        // 1 - Φ(38) at 40 digits: 2.885428360068784e-316
        let v = cdf(-38.0 - 1e-15);
        assert!((v / 2.885428360068784e-316 - 1.0).abs() < 1e-6);
    }
}
