//! Finite-n probabilities as deterministic integrals, their asymptotic forms,
//! and closed-form bound evaluators.
//!
//! Integrals over a uniform order statistic u are taken in the rescaled
//! variable x = n·u, where the density factor (1 − x/n)^(n−1) decays like e^(−x).
//! The outer range is cut at min(n, 40 + 10 log n); the discarded mass is
//! bounded by (n/(n−1))·e^(−cut·(n−1)/n) and added to the error estimate.

use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{domain, Error, Result};
use crate::gauss::{self, QuantileGap, SQRT_2, SQRT_2PI};
use crate::quad::{self, integrate_with_breaks, QuadResult, QuadSpec};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const FRAC_PI_2_SQRT: f64 = 1.253_314_137_315_500_3;

/// Values at or above this level have an empty remaining range in H.
pub const H_UPPER_CUTOFF: f64 = 1.0 - 1e-8;

#[inline]
fn ln_1m(p: f64) -> f64 {
    libm::log1p(-p)
}

/// 1 − (1 − p)^m
#[inline]
fn one_minus_pow(p: f64, m: f64) -> f64 {
    -libm::expm1(m * ln_1m(p))
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn check_n(n: u64, min: u64) -> Result<f64> {
    if n < min {
        return Err(domain("n", n as f64, "n too small for this quantity"));
    }
    Ok(n as f64)
}

/// Outer cut and the bound on the density mass beyond it.
fn outer_cut(n: f64) -> (f64, f64) {
    let cut = n.min(40.0 + 10.0 * libm::log(n));
    if cut >= n || n <= 1.0 {
        (n, 0.0)
    } else {
        (cut, n / (n - 1.0) * libm::exp(-cut * (n - 1.0) / n))
    }
}

fn outer_breaks(cut: f64) -> Vec<f64> {
    let mut b = Vec::new();
    quad::geometric_breaks(0.0, cut, 0.03125, 2.0, &mut b);
    b
}

/// ∫₀^cut (1 − x/n)^(n−1) g(x/n) dx for 0 ≤ g ≤ `g_max`, i.e. n E g(U_(1)).
fn order_min_integral<G: FnMut(f64) -> f64>(n: f64, mut g: G, g_max: f64, spec: &QuadSpec) -> QuadResult {
    let (cut, tail) = outer_cut(n);
    let m = n - 1.0;
    let f = |x: f64| {
        let u = x / n;
        let dens = if m == 0.0 { 1.0 } else { libm::exp(m * ln_1m(u)) };
        if dens == 0.0 {
            0.0
        } else {
            dens * g(u)
        }
    };
    let mut r = integrate_with_breaks(f, &outer_breaks(cut), spec);
    r.err_est += tail * g_max;
    r
}

/// n ∫₀¹ u^r (1−u)^(n−1) (log 1/u)^γ du.
pub fn beta_log(n: u64, r: f64, gamma: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 1)?;
    quad::check_finite("r", r)?;
    quad::check_finite("gamma", gamma)?;
    if r < 0.0 {
        return Err(domain("r", r, "[0, inf)"));
    }
    if gamma < 0.0 {
        return Err(domain("gamma", gamma, "[0, inf)"));
    }
    let (cut, _) = outer_cut(nf);
    let g_max = libm::pow(libm::log(nf / cut).max(1.0), gamma);
    Ok(order_min_integral(
        nf,
        |u| {
            let a = if r == 0.0 { 1.0 } else { libm::pow(u, r) };
            let b = if gamma == 0.0 { 1.0 } else { libm::pow(-libm::log(u), gamma) };
            a * b
        },
        g_max,
        spec,
    ))
}

/// Γ(r+1) n^(−r) (log n)^γ
pub fn beta_log_asymptote(n: f64, r: f64, gamma: f64) -> f64 {
    libm::exp(ln_gamma(r + 1.0) - r * libm::log(n) + gamma * libm::log(libm::log(n)))
}

/// P(Y ≤ min of n standard normals) for Y ~ N(0, 1/a²):
/// n ∫₀¹ Φ(a Φ⁻¹(u)) (1−u)^(n−1) du.
pub fn normal_vs_min(n: u64, a: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 1)?;
    quad::check_finite("a", a)?;
    if a < 1.0 {
        return Err(domain("a", a, "[1, inf)"));
    }
    Ok(order_min_integral(nf, |u| gauss::cdf(a * gauss::quantile(u)), 1.0, spec))
}

/// ((4π)^((a²−1)/2) / a) Γ(a²+1) n^(−a²) (log n)^((a²−1)/2)
pub fn normal_vs_min_asymptote(n: f64, a: f64) -> f64 {
    let a2 = a * a;
    let e = 0.5 * (a2 - 1.0);
    libm::exp(
        e * libm::log(4.0 * core::f64::consts::PI) - libm::log(a) + ln_gamma(a2 + 1.0)
            - a2 * libm::log(n)
            + e * libm::log(libm::log(n)),
    )
}

/// E q^power with q = Ψ(U_(1)).
pub fn qn_moment(n: u64, power: u32, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 2)?;
    if !(power == 1 || power == 2) {
        return Err(domain("power", power as f64, "{1, 2}"));
    }
    if power == 1 {
        // Same integrand as normal_vs_min with a = √2.
        return Ok(order_min_integral(nf, |u| gauss::cdf(SQRT_2 * gauss::quantile(u)), 1.0, spec));
    }
    Ok(order_min_integral(
        nf,
        |u| {
            let p = gauss::tail_psi(u);
            p * p
        },
        1.0,
        spec,
    ))
}

/// Probability that some pair through the minimum-diagonal vertex improves,
/// E[1 − (1 − q)^(n−1)].
pub fn s_term(n: u64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 1)?;
    if n == 1 {
        return Ok(QuadResult::ZERO);
    }
    let m = nf - 1.0;
    Ok(order_min_integral(nf, |u| one_minus_pow(gauss::tail_psi(u), m), 1.0, spec))
}

/// Two-term expansion (2√(2π)√L)/n − √(π/2)(log L + log 4π − 2γ)/(n√L), L = log n.
pub fn s_refined(n: u64) -> Result<f64> {
    let nf = check_n(n, 3)?;
    let l = libm::log(nf);
    let lead = 2.0 * SQRT_2PI * libm::sqrt(l) / nf;
    let corr = FRAC_PI_2_SQRT
        * (libm::log(l) + libm::log(4.0 * core::f64::consts::PI) - 2.0 * EULER_GAMMA)
        / (nf * libm::sqrt(l));
    Ok(lead - corr)
}

/// The averaged pair probability G at levels with precomputed quantile scales,
/// as (1−v)⁻¹ ∫_{−t}^∞ Φ(−√2[s + √(h(z+s))]) φ(z) dz, integrated in r = z + t.
fn g_from_gap(gap: QuantileGap, v: f64, spec: &QuadSpec) -> QuadResult {
    let QuantileGap { s, t, h } = gap;
    if h == 0.0 {
        return QuadResult::exact(gauss::cdf(-SQRT_2 * s));
    }
    let f = |r: f64| {
        let outer = gauss::cdf(-SQRT_2 * (s + libm::sqrt(h * (r + h))));
        outer * gauss::pdf(r - t)
    };
    let top = t.max(0.0) + 12.0;
    let mut breaks: Vec<f64> = Vec::with_capacity(12);
    breaks.push(0.0);
    breaks.push(top);
    let k = 1.0 / (s.abs() + h + 1.0);
    quad::insert_breaks(&mut breaks, &[k, 4.0 * k, t - 4.0, t - 1.5, t, t + 1.5, t + 4.0]);
    let r = integrate_with_breaks(f, &breaks, spec);
    r.scaled(1.0 / (1.0 - v))
}

fn check_levels(u: f64, v: f64) -> Result<()> {
    for (name, x) in [("u", u), ("v", v)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(domain(name, x, "(0, 1)"));
        }
    }
    if u > v {
        return Err(Error::Invalid("requires u <= v"));
    }
    Ok(())
}

/// G(u, v): the pair probability p(u, v, w) averaged over w uniform on (v, 1).
pub fn g_at(u: f64, v: f64, spec: &QuadSpec) -> Result<QuadResult> {
    check_levels(u, v)?;
    Ok(g_from_gap(gauss::gap_unchecked(u, v), v, spec))
}

/// H(u, v) = (2/(1−v)²) ∫_v¹ (1−w) G(u, w) dw: p averaged over two
/// independent uniforms on (v, 1).
pub fn h_at(u: f64, v: f64, spec: &QuadSpec) -> Result<QuadResult> {
    check_levels(u, v)?;
    if v >= H_UPPER_CUTOFF {
        return Ok(QuadResult {
            err_est: 1e-12,
            ..QuadResult::ZERO
        });
    }
    let s = -gauss::quantile(u);
    let inner = inner_spec(spec);
    let stats = InnerStats::default();
    let f = |w: f64| {
        let t = -gauss::quantile(w);
        let g = g_from_gap(QuantileGap { s, t, h: (s - t).max(0.0) }, w, &inner);
        stats.record(&g);
        (1.0 - w) * g.value
    };
    let sigma = 1.0 / (s * s).max(1.0);
    let mut breaks = Vec::new();
    let span = 1.0 - v;
    quad::geometric_breaks(0.0, span, u * sigma, 4.0, &mut breaks);
    let breaks: Vec<f64> = breaks.iter().map(|d| v + d).collect();
    let r = integrate_with_breaks(f, &breaks, spec);
    let scale = 2.0 / (span * span);
    Ok(finish_nested(r, &[&stats], 0.0).scaled(scale))
}

/// Tolerances one level down in a nested integral.
fn inner_spec(spec: &QuadSpec) -> QuadSpec {
    QuadSpec {
        rel_tol: spec.rel_tol * 0.1,
        abs_tol: spec.abs_tol,
        max_subdivisions: spec.max_subdivisions,
    }
}

/// Running totals over the inner integrals of a nested evaluation.
#[derive(Default)]
struct InnerStats {
    err: Cell<f64>,
    mass: Cell<f64>,
    evals: Cell<u64>,
}

impl InnerStats {
    fn record(&self, r: &QuadResult) {
        self.err.set(self.err.get() + r.err_est);
        self.mass.set(self.mass.get() + r.value.abs());
        self.evals.set(self.evals.get() + r.evals);
    }

    /// Aggregate relative error of the recorded inner results.
    fn rel(&self) -> f64 {
        let mass = self.mass.get();
        if mass > 0.0 {
            self.err.get() / mass
        } else {
            0.0
        }
    }
}

/// Folds inner-integral error (as a relative error on the outer value), a
/// truncation bound, and inner evaluation counts into an outer result.
fn finish_nested(mut outer: QuadResult, levels: &[&InnerStats], trunc: f64) -> QuadResult {
    for st in levels {
        outer.err_est += st.rel() * outer.value.abs();
        outer.evals += st.evals.get();
    }
    outer.err_est += trunc;
    outer
}

/// Which weight multiplies G(x/n, y/n) in a triangle integral over 0 < x < y.
#[derive(Clone, Copy)]
enum PairWeight {
    /// (1−y/n)^(n−2) G
    Linear,
    /// (1−y/n)^(n−2) (1−Ψ(x/n))^(n−1) [1 − (1−G)^(n−2)] / (n−2)
    Exact,
    /// (1−y/n) [(1−x/n)^(n−3) − (1−y/n)^(n−3)] G
    Third,
}

/// ∫₀^cut ∫ₓ^top w(x, y) G(x/n, y/n) dy dx with the middle variable
/// y = x(1 + σ ω²), σ = 1/max(s², 1), s = −Φ⁻¹(x/n), which resolves the layer
/// y − x ≈ x/s² where G changes fastest. s is computed once per outer node.
fn triangle_integral(n: f64, weight: PairWeight, spec: &QuadSpec) -> QuadResult {
    let (cut, tail) = outer_cut(n);
    let mid_spec = inner_spec(spec);
    let g_spec = inner_spec(&mid_spec);
    let y_top = match weight {
        PairWeight::Third => n,
        _ => cut,
    };
    let inner_stats = InnerStats::default();
    let g_stats = InnerStats::default();
    let mut wbreaks: Vec<f64> = Vec::new();
    let outer = |x: f64| -> f64 {
        let u = x / n;
        let s = -gauss::quantile(u);
        let sigma = 1.0 / (s * s).max(1.0);
        let w_top = libm::sqrt(((y_top - x) / (x * sigma)).max(0.0));
        if w_top <= 0.0 {
            return 0.0;
        }
        let ln_x = ln_1m(u);
        let psi_pow = match weight {
            PairWeight::Exact => libm::exp((n - 1.0) * ln_1m(gauss::cdf(-SQRT_2 * s))),
            _ => 0.0,
        };
        let middle = |w: f64| -> f64 {
            let y = x * (1.0 + sigma * w * w);
            if y >= n {
                return 0.0;
            }
            let v = y / n;
            let jac = 2.0 * x * sigma * w;
            let ln_y = ln_1m(v);
            let t = -gauss::quantile(v);
            let gap = QuantileGap { s, t, h: (s - t).max(0.0) };
            let outer_w = match weight {
                PairWeight::Linear => libm::exp((n - 2.0) * ln_y),
                PairWeight::Exact => libm::exp((n - 2.0) * ln_y) * psi_pow,
                PairWeight::Third => {
                    (1.0 - v) * libm::exp((n - 3.0) * ln_x) * -libm::expm1((n - 3.0) * (ln_y - ln_x))
                }
            };
            if outer_w == 0.0 {
                return 0.0;
            }
            let g = g_from_gap(gap, v, &g_spec);
            g_stats.record(&g);
            let val = match weight {
                PairWeight::Exact => one_minus_pow(g.value, n - 2.0) / (n - 2.0),
                _ => g.value,
            };
            jac * outer_w * val
        };
        quad::geometric_breaks(0.0, w_top, 0.25, 2.0, &mut wbreaks);
        let r = integrate_with_breaks(middle, &wbreaks, &mid_spec);
        inner_stats.record(&r);
        r.value
    };
    let r = integrate_with_breaks(outer, &outer_breaks(cut), spec);
    // Discarded y-range beyond the cut carries at most e^(−cut(n−2)/n) per unit x.
    let y_trunc = match weight {
        PairWeight::Third => 0.0,
        _ if cut < n => cut * libm::exp(-cut * (n - 2.0) / n) * n / (n - 2.0),
        _ => 0.0,
    };
    finish_nested(r, &[&inner_stats, &g_stats], tail + y_trunc)
}

/// Linear intensity of the second-vertex class, (n−2) E G(U_(1), U_(2)).
pub fn i_term(n: u64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 2)?;
    if n == 2 {
        return Ok(QuadResult::ZERO);
    }
    let pref = (nf - 1.0) * (nf - 2.0) / nf;
    Ok(triangle_integral(nf, PairWeight::Linear, spec).scaled(pref))
}

/// Exact second-vertex class probability
/// A_n = E[(1−q)^(n−1) (1 − ∏_(j≥2) (1 − p_1j))], using that the uniforms
/// above U_(2) are i.i.d. given (U_(1), U_(2)).
pub fn a_term_exact(n: u64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 3)?;
    let pref = (nf - 1.0) * (nf - 2.0) / nf;
    Ok(triangle_integral(nf, PairWeight::Exact, spec).scaled(pref))
}

/// Expected sum of pair probabilities over pairs not touching the two
/// smallest diagonal entries.
pub fn s3_term(n: u64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 4)?;
    let pref = (nf - 1.0) * (nf - 2.0) / nf;
    Ok(triangle_integral(nf, PairWeight::Third, spec).scaled(pref))
}

/// P(X < 2Z_(1) − Z_(k)) for X ~ N(0, 1/2) independent of the diagonal: the
/// probability of the one-row event for a single pair (k, j), j > k. The order
/// index k is one-based.
pub fn p_nk(n: u64, k: u64, spec: &QuadSpec) -> Result<QuadResult> {
    let nf = check_n(n, 2)?;
    if k == 0 || k > n {
        return Err(domain("k", k as f64, "[1, n]"));
    }
    if k == 1 {
        return normal_vs_min(n, SQRT_2, spec);
    }
    let kf = k as f64;
    let ln_pref = ln_gamma(nf + 1.0) - ln_gamma(kf - 1.0) - ln_gamma(nf - kf + 1.0) - kf * libm::log(nf);
    let (cut, _) = outer_cut(nf);
    // Mass of U_(1) beyond the cut bounds the discarded part.
    let tail = if cut < nf { libm::exp(nf * ln_1m(cut / nf)) } else { 0.0 };
    let inner_stats = InnerStats::default();
    let mid_spec = inner_spec(spec);
    let mut rbreaks: Vec<f64> = Vec::new();
    let outer = |x: f64| -> f64 {
        let u = x / nf;
        let s = -gauss::quantile(u);
        let rho_top = libm::log(nf / x);
        if rho_top <= 0.0 {
            return 0.0;
        }
        let inner = |rho: f64| -> f64 {
            let y = x * libm::exp(rho);
            if y >= nf {
                return 0.0;
            }
            let v = y / nf;
            let t = -gauss::quantile(v);
            let h = (s - t).max(0.0);
            let mut ln_rest = (nf - kf) * ln_1m(v) + ln_pref;
            if k > 2 {
                // (y − x)^(k−2) with y − x = x·expm1(ρ)
                ln_rest += (kf - 2.0) * (libm::log(x) + libm::log(libm::expm1(rho)));
            }
            gauss::cdf(-SQRT_2 * (s + h)) * libm::exp(ln_rest) * y
        };
        rbreaks.clear();
        quad::geometric_breaks(0.0, rho_top, 0.125, 2.0, &mut rbreaks);
        let peak = libm::log(kf / x);
        quad::insert_breaks(&mut rbreaks, &[peak - 1.0, peak, peak + 1.0]);
        let r = integrate_with_breaks(inner, &rbreaks, &mid_spec);
        inner_stats.record(&r);
        r.value
    };
    let r = integrate_with_breaks(outer, &outer_breaks(cut), spec);
    Ok(finish_nested(r, &[&inner_stats], tail))
}

/// Leading-order forms of the class probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticTerm {
    S,
    A,
    B,
    Pnk,
}

pub const S_CONST: f64 = 2.0 * SQRT_2PI;
pub const A_CONST: f64 = 3.0 * FRAC_PI_2_SQRT;
pub const B_CONST: f64 = 9.0 * FRAC_PI_2_SQRT;

/// 24√(2π)/((k+2)(k+3)) for one-based k ≥ 2.
pub fn pnk_constant(k: u64) -> f64 {
    let kf = k as f64;
    24.0 * SQRT_2PI / ((kf + 2.0) * (kf + 3.0))
}

pub fn asymptote(term: AsymptoticTerm, n: f64, k: Option<u64>) -> Result<f64> {
    quad::check_finite("n", n)?;
    if n < 2.0 {
        return Err(domain("n", n, "[2, inf)"));
    }
    let l = libm::log(n);
    Ok(match term {
        AsymptoticTerm::S => S_CONST * libm::sqrt(l) / n,
        AsymptoticTerm::A => A_CONST / (n * libm::sqrt(l)),
        AsymptoticTerm::B => B_CONST / (n * l * libm::sqrt(l)),
        AsymptoticTerm::Pnk => {
            let k = k.ok_or(Error::Invalid("the one-row asymptote needs k"))?;
            if k < 2 {
                return Err(domain("k", k as f64, "[2, inf)"));
            }
            pnk_constant(k) * libm::sqrt(l) / (n * n)
        }
    })
}

fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Union bound k·C(n,k)·P(Y ≤ min of n−k normals), Y ~ N(0, (k+1)/(2k²)),
/// on the probability that some k-support passes the row-average test.
pub fn row_union_bound(n: u64, k: u64, spec: &QuadSpec) -> Result<QuadResult> {
    if k < 3 || k + 1 > n {
        return Err(domain("k", k as f64, "[3, n-1]"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let a = libm::sqrt(2.0 * kf * kf / (kf + 1.0));
    let p = normal_vs_min(n - k, a, spec)?;
    let factor = libm::exp(libm::log(kf) + ln_binomial(nf, kf));
    Ok(p.scaled(factor))
}

/// ((2k−3)! / ((k−1)! (n+1)^(k−2))) (η² log n + (k−1)/(2k−2))^(k−1) e^(−(k−2)²/4)
pub fn chen_peng_bound(n: u64, k: u64, eta: f64) -> Result<f64> {
    if n < 2 {
        return Err(domain("n", n as f64, "[2, inf)"));
    }
    if k < 2 {
        return Err(domain("k", k as f64, "[2, inf)"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(domain("eta", eta, "(0, inf)"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let base = eta * eta * libm::log(nf) + (kf - 1.0) / (2.0 * kf - 2.0);
    Ok(libm::exp(
        ln_gamma(2.0 * kf - 2.0) - ln_gamma(kf) - (kf - 2.0) * libm::log(nf + 1.0)
            + (kf - 1.0) * libm::log(base)
            - (kf - 2.0) * (kf - 2.0) / 4.0,
    ))
}

/// c(α) = 2(2 − √(1−α))²
pub fn bulk_exponent(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("alpha", alpha, "(0, 1)"));
    }
    let d = 2.0 - libm::sqrt(1.0 - alpha);
    Ok(2.0 * d * d)
}
