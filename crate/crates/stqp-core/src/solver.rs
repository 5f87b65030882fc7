//! Exact machinery for min xᵀQx over the simplex: edge minimisation, the
//! two-point threshold, KKT candidates per support, exhaustive enumeration,
//! a lattice oracle, and the row-average necessary condition.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{domain, Error, Result};
use crate::goe::GoeMatrix;

/// Largest dimension accepted by [`solve_enumerate`].
pub const MAX_EXACT_N: usize = 25;
/// Default cap on support size during enumeration.
pub const DEFAULT_K_MAX: usize = 15;
/// Candidate weights at or below this are treated as zero (inadmissible).
pub const POSITIVITY_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMin {
    pub t_star: f64,
    pub value: f64,
}

/// Minimises f(t) = a t² + 2b t(1-t) + c (1-t)² over [0, 1].
pub fn edge_min(a: f64, b: f64, c: f64) -> EdgeMin {
    if b < a.min(c) {
        let denom = a + c - 2.0 * b;
        EdgeMin {
            t_star: (c - b) / denom,
            value: (a * c - b * b) / denom,
        }
    } else if a <= c {
        EdgeMin { t_star: 1.0, value: a }
    } else {
        EdgeMin { t_star: 0.0, value: c }
    }
}

/// For m ≤ a ≤ c, the value tau with `edge_min(a, b, c).value < m ⇔ b < tau`.
pub fn two_point_threshold(m: f64, a: f64, c: f64) -> Result<f64> {
    for (name, v) in [("m", m), ("a", a), ("c", c)] {
        if !v.is_finite() {
            return Err(Error::NonFinite { name, value: v });
        }
    }
    if !(m <= a && a <= c) {
        return Err(Error::Invalid("two_point_threshold requires m <= a <= c"));
    }
    Ok(m - libm::sqrt((a - m) * (c - m)))
}

/// Stationary point of the objective on the relative interior of a face.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCandidate {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Lagrange multiplier, equal to the objective value at the candidate.
    pub multiplier: f64,
}

fn check_support(q: &GoeMatrix, support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Invalid("support must be nonempty"));
    }
    if support.iter().any(|&i| i >= q.n()) {
        return Err(Error::Invalid("support index out of range"));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("support must be strictly increasing"));
    }
    Ok(())
}

/// Solves Q_K y = 1 in place by Gaussian elimination with partial pivoting.
/// `a` holds the k×k block row-major and is destroyed. Returns false when a
/// pivot falls below `PIVOT_TOL` times the largest entry.
fn solve_ones(a: &mut [f64], y: &mut [f64], k: usize) -> bool {
    let a = &mut a[..k * k];
    let y = &mut y[..k];
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    let tol = PIVOT_TOL * scale;
    y.fill(1.0);
    for col in 0..k {
        let mut piv = col;
        let mut best = a[col * k + col].abs();
        for r in col + 1..k {
            let v = a[r * k + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < tol {
            return false;
        }
        if piv != col {
            let (upper, lower) = a.split_at_mut(piv * k);
            upper[col * k..col * k + k].swap_with_slice(&mut lower[..k]);
            y.swap(col, piv);
        }
        let (upper, lower) = a.split_at_mut((col + 1) * k);
        let pivot_row = &upper[col * k + col..col * k + k];
        let d = pivot_row[0];
        let y_col = y[col];
        for (row, yr) in lower.chunks_exact_mut(k).zip(y[col + 1..].iter_mut()) {
            let f = row[col] / d;
            if f == 0.0 {
                continue;
            }
            for (x, p) in row[col + 1..].iter_mut().zip(&pivot_row[1..]) {
                *x -= f * p;
            }
            *yr -= f * y_col;
        }
    }
    for r in (0..k).rev() {
        let row = &a[r * k..r * k + k];
        let mut acc = y[r];
        for (c, v) in row[r + 1..].iter().zip(&y[r + 1..]) {
            acc -= c * v;
        }
        y[r] = acc / row[r];
    }
    true
}

/// Core of [`kkt_candidate`]: writes normalised weights to `y` and returns the
/// multiplier, or `None` when the support admits no interior candidate.
/// `dense` is Q as a full n×n row-major array.
fn candidate_into(dense: &[f64], n: usize, support: &[usize], block: &mut [f64], y: &mut [f64]) -> Option<f64> {
    let k = support.len();
    if k == 1 {
        y[0] = 1.0;
        return Some(dense[support[0] * (n + 1)]);
    }
    for (r, &i) in support.iter().enumerate() {
        let row = &dense[i * n..(i + 1) * n];
        for (c, &j) in support.iter().enumerate() {
            block[r * k + c] = row[j];
        }
    }
    if !solve_ones(block, y, k) {
        return None;
    }
    let total: f64 = y[..k].iter().sum();
    let mass: f64 = y[..k].iter().map(|v| v.abs()).sum();
    if total.abs() <= 1e-12 * mass {
        return None;
    }
    for v in y[..k].iter_mut() {
        *v /= total;
    }
    if y[..k].iter().any(|&w| w <= POSITIVITY_TOL) {
        return None;
    }
    Some(1.0 / total)
}

fn dense_rows(q: &GoeMatrix) -> Vec<f64> {
    let n = q.n();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = q.get(i, j);
        }
    }
    d
}

/// Returns the candidate x_K = Q_K⁻¹1 / (1ᵀQ_K⁻¹1) if Q_K is nonsingular and
/// every weight is positive. Support indices are zero-based and increasing.
pub fn kkt_candidate(q: &GoeMatrix, support: &[usize]) -> Result<Option<KktCandidate>> {
    check_support(q, support)?;
    let k = support.len();
    let mut block = vec![0.0; k * k];
    let mut y = vec![0.0; k];
    let dense = dense_rows(q);
    Ok(candidate_into(&dense, q.n(), support, &mut block, &mut y).map(|multiplier| KktCandidate {
        support: support.to_vec(),
        weights: y,
        multiplier,
    }))
}

/// Global optimiser of the simplex QP.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub support: Vec<usize>,
    pub kappa: usize,
    pub value: f64,
}

/// Output of a full enumeration, including what the argmin alone hides.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub best: SolveResult,
    /// Smallest value among admissible candidates other than the best one.
    pub runner_up: Option<f64>,
    pub admissible: usize,
}

/// Advances `idx` to the next k-subset of 0..n in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn resolve_k_max(n: usize, k_max: Option<usize>) -> Result<usize> {
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge { n, limit: MAX_EXACT_N });
    }
    let k_max = k_max.unwrap_or(n.min(DEFAULT_K_MAX));
    if k_max == 0 || k_max > n {
        return Err(domain("k_max", k_max as f64, "[1, n]"));
    }
    Ok(k_max)
}

/// Visits every support of size 1..=k_max by size, then lexicographically.
pub fn enumerate_supports(q: &GoeMatrix, k_max: Option<usize>) -> Result<Enumeration> {
    let n = q.n();
    let k_max = resolve_k_max(n, k_max)?;
    let mut block = vec![0.0; k_max * k_max];
    let mut y = vec![0.0; k_max];
    let dense = dense_rows(q);
    let mut best_support: Vec<usize> = Vec::new();
    let mut best_weights: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    let mut runner_up = f64::INFINITY;
    let mut admissible = 0usize;
    for k in 1..=k_max {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if let Some(lambda) = candidate_into(&dense, n, &idx, &mut block, &mut y) {
                admissible += 1;
                if lambda < best {
                    runner_up = best;
                    best = lambda;
                    best_support.clear();
                    best_support.extend_from_slice(&idx);
                    best_weights.clear();
                    best_weights.extend_from_slice(&y[..k]);
                } else if lambda < runner_up {
                    runner_up = lambda;
                }
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    let mut x = vec![0.0; n];
    for (&i, &w) in best_support.iter().zip(&best_weights) {
        x[i] = w;
    }
    Ok(Enumeration {
        best: SolveResult {
            x,
            kappa: best_support.len(),
            support: best_support,
            value: best,
        },
        runner_up: runner_up.is_finite().then_some(runner_up),
        admissible,
    })
}

/// Exact global solve by support enumeration (`k_max` defaults to min(n, 15)).
pub fn solve_enumerate(q: &GoeMatrix, k_max: Option<usize>) -> Result<SolveResult> {
    enumerate_supports(q, k_max).map(|e| e.best)
}

/// Index of the smallest diagonal entry, lowest index on ties.
pub fn min_diag_heuristic(q: &GoeMatrix) -> usize {
    let mut best = 0;
    for i in 1..q.n() {
        if q.get(i, i) < q.get(best, best) {
            best = i;
        }
    }
    best
}

/// True iff some row of Q restricted to K has average below the smallest
/// diagonal entry of Q.
pub fn row_average_ok(q: &GoeMatrix, support: &[usize]) -> Result<bool> {
    check_support(q, support)?;
    if support.len() < 2 {
        return Err(Error::Invalid("row-average condition needs |support| > 1"));
    }
    let dmin = (0..q.n()).map(|r| q.get(r, r)).fold(f64::INFINITY, f64::min);
    let k = support.len() as f64;
    Ok(support
        .iter()
        .any(|&i| support.iter().map(|&j| q.get(i, j)).sum::<f64>() / k < dmin))
}

struct Scored {
    value: f64,
    point: Vec<u32>,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value)
    }
}

/// Number of best lattice points polished by pairwise descent.
const ORACLE_STARTS: usize = 24;

/// Independent check on [`solve_enumerate`] for n ≤ 5: scan the lattice
/// {k/resolution} ∩ simplex, then polish the best few points by repeated exact
/// minimisation along pairs of coordinates.
pub fn grid_oracle(q: &GoeMatrix, resolution: usize) -> Result<f64> {
    let n = q.n();
    if n > 5 {
        return Err(domain("n", n as f64, "[1, 5]"));
    }
    if resolution == 0 {
        return Err(domain("resolution", 0.0, "[1, inf)"));
    }
    if n == 1 {
        return Ok(q.get(0, 0));
    }
    let res = resolution as u32;
    let mut heap: BinaryHeap<Scored> = BinaryHeap::new();
    let mut counts = vec![0u32; n];
    let mut x = vec![0.0; n];
    counts[n - 1] = res;
    loop {
        for i in 0..n {
            x[i] = counts[i] as f64 / res as f64;
        }
        let value = q.quadratic_form(&x);
        if heap.len() < ORACLE_STARTS {
            heap.push(Scored { value, point: counts.clone() });
        } else if value < heap.peek().map_or(f64::INFINITY, |s| s.value) {
            heap.pop();
            heap.push(Scored { value, point: counts.clone() });
        }
        if !next_composition(&mut counts, res) {
            break;
        }
    }
    let mut best = f64::INFINITY;
    for start in heap.into_vec() {
        for i in 0..n {
            x[i] = start.point[i] as f64 / res as f64;
        }
        best = best.min(pairwise_descent(q, &mut x));
    }
    Ok(best)
}

/// Steps through all compositions of `total` into `counts.len()` parts. The
/// leading parts run as an odometer; the last part takes the remainder.
fn next_composition(counts: &mut [u32], total: u32) -> bool {
    let last = counts.len() - 1;
    let mut used = total - counts[last];
    for i in (0..last).rev() {
        if used < total {
            counts[i] += 1;
            counts[last] = total - used - 1;
            return true;
        }
        used -= counts[i];
        counts[i] = 0;
    }
    false
}

fn pairwise_descent(q: &GoeMatrix, x: &mut [f64]) -> f64 {
    let n = x.len();
    let mut f = q.quadratic_form(x);
    let mut g = vec![0.0; n];
    for _sweep in 0..200_000 {
        let start = f;
        for i in 0..n {
            for j in i + 1..n {
                let m = x[i] + x[j];
                if m <= 0.0 {
                    continue;
                }
                for r in 0..n {
                    g[r] = (0..n)
                        .filter(|&c| c != i && c != j)
                        .map(|c| q.get(r, c) * x[c])
                        .sum();
                }
                let rest: f64 = (0..n)
                    .filter(|&r| r != i && r != j)
                    .map(|r| x[r] * g[r])
                    .sum();
                // Bernstein coefficients of the objective along the segment.
                let at_i = rest + 2.0 * m * g[i] + m * m * q.get(i, i);
                let at_j = rest + 2.0 * m * g[j] + m * m * q.get(j, j);
                let mid = rest + m * (g[i] + g[j]) + m * m * q.get(i, j);
                let e = edge_min(at_i, mid, at_j);
                if e.value < f {
                    x[i] = e.t_star * m;
                    x[j] = m - x[i];
                    f = q.quadratic_form(x);
                }
            }
        }
        if start - f < 1e-12 {
            break;
        }
    }
    f
}
