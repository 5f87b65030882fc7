//! Two-coordinate improvement events in sorted coordinates.
//!
//! With the diagonal sorted as z[0] ≤ z[1] ≤ …, the edge between vertices i
//! and j beats the best vertex exactly when X_ij < tau_ij, where
//! tau_ij = z[0] − √((z[i]−z[0])(z[j]−z[0])). Given the diagonal, X_ij is
//! N(0, 1/2), so the event has probability p_ij = Φ(√2 tau_ij).
//!
//! Pairs are split into three classes: pairs through vertex 0 (S), pairs
//! (1, j) with j ≥ 2 (A), and the rest (B). Indices are zero-based.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::gauss::{self, SQRT_2};
use crate::goe::{self, OrderedInstance, SeedSpec, Stream};

/// Threshold for pair (i, j), i < j, on a sorted diagonal.
#[inline]
pub fn threshold(z: &[f64], i: usize, j: usize) -> f64 {
    let z1 = z[0];
    z1 - libm::sqrt((z[i] - z1) * (z[j] - z1))
}

pub fn pair_threshold(inst: &OrderedInstance, i: usize, j: usize) -> Result<f64> {
    if !(i < j && j < inst.n) {
        return Err(Error::Invalid("pair_threshold requires i < j < n"));
    }
    Ok(threshold(&inst.z, i, j))
}

/// p(u, v, w) = Φ(√2 [Φ⁻¹(u) − √((Φ⁻¹(v)−Φ⁻¹(u))(Φ⁻¹(w)−Φ⁻¹(u)))]) for
/// u ≤ v ≤ w. The product under the root is clamped at zero so that v = u
/// gives Ψ(u).
pub fn pair_prob_p(u: f64, v: f64, w: f64) -> Result<f64> {
    for (name, x) in [("u", u), ("v", v), ("w", w)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(domain(name, x, "(0, 1)"));
        }
    }
    if !(u <= v && v <= w) {
        return Err(Error::Invalid("pair_prob_p requires u <= v <= w"));
    }
    Ok(pair_prob_unchecked(u, v, w))
}

#[inline]
pub(crate) fn pair_prob_unchecked(u: f64, v: f64, w: f64) -> f64 {
    let a = gauss::quantile(u);
    let b = gauss::quantile(v);
    let c = gauss::quantile(w);
    let prod = ((b - a) * (c - a)).max(0.0);
    gauss::cdf(SQRT_2 * (a - libm::sqrt(prod)))
}

/// log(1 − p) for p in [0, 1].
#[inline]
fn ln_1m(p: f64) -> f64 {
    if p < 1e-5 {
        -p * (1.0 + p * (0.5 + p / 3.0))
    } else {
        libm::log1p(-p)
    }
}

/// Per-sample indicators and conditional probabilities of the three classes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairEventReport {
    /// Some pair event occurs.
    pub any_edge: bool,
    /// Some pair through vertex 0 occurs.
    pub i_s: bool,
    /// No S event, and some pair (1, j) occurs.
    pub i_a: bool,
    /// No S or A event, and some remaining pair occurs.
    pub i_b: bool,
    /// Φ(√2 z[0]), the common probability of the S pairs.
    pub q: f64,
    /// 1 − (1−q)^(n−1)
    pub cond_s: f64,
    /// (1−q)^(n−1) (1 − ∏_j (1 − p_1j))
    pub cond_a: f64,
    /// (1−q)^(n−1) ∏_j (1 − p_1j) (1 − ∏_(i,j ≥ 2) (1 − p_ij))
    pub cond_b: f64,
    /// Σ_(j ≥ 2) p_1j
    pub sum_p2: f64,
    /// Σ_(2 ≤ i < j) p_ij
    pub sum_p3: f64,
}

/// Classifies pairs on the sorted diagonal `z`. `below(i, j, tau, p)` must
/// report whether X_ij < tau; it is called only while no event has been seen,
/// so the indicators short-circuit while every p_ij still enters the sums.
pub fn classify_with<F>(z: &[f64], mut below: F) -> PairEventReport
where
    F: FnMut(usize, usize, f64, f64) -> bool,
{
    let n = z.len();
    let z1 = z[0];
    let q = gauss::cdf(SQRT_2 * z1);
    let l1 = (n as f64 - 1.0) * ln_1m(q);
    let mut seen = false;

    let mut i_s = false;
    for j in 1..n {
        if below(0, j, z1, q) {
            i_s = true;
            seen = true;
            break;
        }
    }

    let mut i_a = false;
    let mut l2 = 0.0;
    let mut sum_p2 = 0.0;
    if n > 2 {
        let g1 = z[1] - z1;
        for j in 2..n {
            let tau = z1 - libm::sqrt(g1 * (z[j] - z1));
            let p = gauss::cdf(SQRT_2 * tau);
            sum_p2 += p;
            l2 += ln_1m(p);
            if !seen && below(1, j, tau, p) {
                i_a = true;
                seen = true;
            }
        }
    }

    let mut i_b = false;
    let mut l3 = 0.0;
    let mut sum_p3 = 0.0;
    for i in 2..n {
        let gi = z[i] - z1;
        for j in i + 1..n {
            let tau = z1 - libm::sqrt(gi * (z[j] - z1));
            let p = gauss::cdf(SQRT_2 * tau);
            sum_p3 += p;
            l3 += ln_1m(p);
            if !seen && below(i, j, tau, p) {
                i_b = true;
                seen = true;
            }
        }
    }

    PairEventReport {
        any_edge: seen,
        i_s,
        i_a,
        i_b,
        q,
        cond_s: -libm::expm1(l1),
        cond_a: libm::exp(l1) * -libm::expm1(l2),
        cond_b: libm::exp(l1 + l2) * -libm::expm1(l3),
        sum_p2,
        sum_p3,
    }
}

/// Single O(n²) pass over an ordered instance.
pub fn classify_edges(inst: &OrderedInstance) -> PairEventReport {
    classify_with(&inst.z, |i, j, tau, _| inst.x(i, j) < tau)
}

/// Events E_kj = {X_kj < 2 z[0] − z[k]} for j > k in row k.
#[derive(Debug, Clone, PartialEq)]
pub struct OneRowReport {
    pub any: bool,
    /// Indicator of E_kj for j = k+1, …, n−1.
    pub pairwise: Vec<bool>,
}

pub fn one_row_indicators(inst: &OrderedInstance, k: usize) -> Result<OneRowReport> {
    if k + 1 >= inst.n {
        return Err(domain("k", k as f64, "[0, n-1)"));
    }
    let thr = 2.0 * inst.z[0] - inst.z[k];
    let pairwise: Vec<bool> = (k + 1..inst.n).map(|j| inst.x(k, j) < thr).collect();
    Ok(OneRowReport {
        any: pairwise.iter().any(|&e| e),
        pairwise,
    })
}

/// Row-k summary used by the one-row census.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RowEvents {
    /// Some E_kj occurs.
    pub any_e: bool,
    /// Some F_kj occurs.
    pub any_f: bool,
    /// Number of j with E_kj.
    pub count_e: u32,
    /// Pairs with F_kj but not E_kj.
    pub violations: u32,
    /// Φ(√2 (2 z[0] − z[k])), the conditional probability of each E_kj.
    pub p_row: f64,
}

/// Reusable buffers for sampling a GOE instance and classifying it without
/// materialising the off-diagonal normals.
///
/// An off-diagonal entry is X = Φ⁻¹(U)/√2 for its uniform U, and the map is
/// increasing, so X < tau exactly when U < Φ(√2 tau) = p. Only the n diagonal
/// entries go through the quantile function. The uniforms are drawn in the
/// same order as [`goe::sample_goe`], so both paths see the same instance.
#[derive(Debug, Clone)]
pub struct EdgeWorkspace {
    n: usize,
    uniforms: Vec<f64>,
    diag: Vec<f64>,
    perm: Vec<usize>,
    z: Vec<f64>,
}

impl EdgeWorkspace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("n must be at least 1"));
        }
        Ok(Self {
            n,
            uniforms: vec![0.0; n + n * (n - 1) / 2],
            diag: vec![0.0; n],
            perm: (0..n).collect(),
            z: vec![0.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn draw(&mut self, spec: SeedSpec) {
        let mut stream = Stream::from_spec(spec);
        stream.fill_uniform(&mut self.uniforms);
        let n = self.n;
        for i in 0..n {
            self.diag[i] = gauss::quantile(self.uniforms[i]);
        }
        for (r, p) in self.perm.iter_mut().enumerate() {
            *p = r;
        }
        let diag = &self.diag;
        self.perm
            .sort_unstable_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
        for r in 0..n {
            self.z[r] = self.diag[self.perm[r]];
        }
    }

    /// Uniform behind the off-diagonal entry at sorted positions (i, j).
    #[inline]
    fn off_uniform(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.perm[i], self.perm[j]);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.uniforms[self.n + goe::strict_index(self.n, a, b)]
    }

    /// Sorted diagonal of the most recent draw.
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn classify(&mut self, spec: SeedSpec) -> PairEventReport {
        self.draw(spec);
        let this = &*self;
        classify_with(&this.z, |i, j, _, p| this.off_uniform(i, j) < p)
    }

    /// One-row events in sorted row k, with the F_kj events for comparison.
    pub fn row_events(&mut self, spec: SeedSpec, k: usize) -> Result<RowEvents> {
        if k + 1 >= self.n {
            return Err(domain("k", k as f64, "[0, n-1)"));
        }
        self.draw(spec);
        let z = &self.z;
        let p_row = gauss::cdf(SQRT_2 * (2.0 * z[0] - z[k]));
        let mut out = RowEvents {
            p_row,
            ..RowEvents::default()
        };
        for j in k + 1..self.n {
            let u = self.off_uniform(k, j);
            let e = u < p_row;
            let f = u < gauss::cdf(SQRT_2 * threshold(z, k, j));
            out.any_e |= e;
            out.any_f |= f;
            out.count_e += e as u32;
            if f && !e {
                out.violations += 1;
            }
        }
        Ok(out)
    }
}
