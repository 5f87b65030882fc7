//! GOE instances: diagonal N(0,1), off-diagonal N(0,1/2), all independent.
//!
//! Every sample is addressed by a `(seed, sample_index)` pair. The pair keys a
//! ChaCha8 stream (seed expands to the key, the index selects the stream), so a
//! sample never depends on which worker draws it or in what order.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{domain, Error, Result};
use crate::gauss;

pub const OFF_DIAG_SD: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Identifies one independent sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub seed: u64,
    pub sample_index: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, sample_index: u64) -> Self {
        Self { seed, sample_index }
    }
}

/// Uniform stream for one sample. Draws lie strictly inside (0, 1).
#[derive(Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds the stream for `(seed, sample_index)`: the 256-bit ChaCha key is the
/// SplitMix64 expansion of `seed`, the 64-bit stream id is `sample_index`, and
/// the block counter starts at zero.
pub fn derive_stream(seed: u64, sample_index: u64) -> Stream {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(sample_index);
    Stream { rng }
}

impl Stream {
    pub fn from_spec(spec: SeedSpec) -> Self {
        derive_stream(spec.seed, spec.sample_index)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Midpoint of one of 2^53 equal cells of (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        gauss::quantile(self.uniform())
    }

    /// Fills `out` with consecutive uniforms.
    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.uniform();
        }
    }
}

/// Index of entry (i, j), i <= j, in row-major packed upper-triangular storage.
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// A symmetric matrix stored once as its packed upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct GoeMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl GoeMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.upper[packed_index(n, i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Builds from full rows. Requires a square, finite array whose mirrored
    /// entries agree to `sym_tol` (absolute); the two halves are averaged.
    pub fn from_rows(rows: &[Vec<f64>], sym_tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("matrix has no rows"));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("matrix is not square"));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite { name: "entry", value: if a.is_finite() { b } else { a } });
                }
                if (a - b).abs() > sym_tol {
                    return Err(domain("asymmetry", (a - b).abs(), "[0, tolerance]"));
                }
                m.upper[packed_index(n, i, j)] = 0.5 * (a + b);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper[packed_index(self.n, a, b)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper[packed_index(self.n, a, b)] = value;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// xᵀQx
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            if x[i] == 0.0 {
                continue;
            }
            acc += self.get(i, i) * x[i] * x[i];
            for j in i + 1..self.n {
                acc += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }
}

/// Draws the n diagonal entries first, then the upper triangle row by row,
/// each by inverse transform of one uniform.
pub fn sample_goe(n: usize, spec: SeedSpec) -> Result<GoeMatrix> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1"));
    }
    let mut stream = Stream::from_spec(spec);
    let mut m = GoeMatrix::zeros(n);
    for i in 0..n {
        m.upper[packed_index(n, i, i)] = stream.standard_normal();
    }
    for i in 0..n {
        for j in i + 1..n {
            m.upper[packed_index(n, i, j)] = OFF_DIAG_SD * stream.standard_normal();
        }
    }
    Ok(m)
}

/// Diagonal order statistics, the sorting permutation and the relabelled
/// off-diagonal entries. Indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedInstance {
    pub n: usize,
    /// Sorted diagonal, nondecreasing.
    pub z: Vec<f64>,
    /// `perm[r]` is the original index holding the r-th smallest diagonal entry.
    pub perm: Vec<usize>,
    /// Packed strict upper triangle: entry (i, j), i < j, is `Q[perm[i]][perm[j]]`.
    pub x_off: Vec<f64>,
}

/// Index of (i, j), i < j, in packed strict upper-triangular storage.
#[inline]
pub fn strict_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Sorting order of `diag`, ties broken by original index.
pub fn sort_order(diag: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..diag.len()).collect();
    perm.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    perm
}

pub fn order_instance(q: &GoeMatrix) -> OrderedInstance {
    let n = q.n();
    let diag = q.diag();
    let perm = sort_order(&diag);
    let z = perm.iter().map(|&p| diag[p]).collect();
    let mut x_off = vec![0.0; n * n.saturating_sub(1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            x_off[strict_index(n, i, j)] = q.get(perm[i], perm[j]);
        }
    }
    OrderedInstance { n, z, perm, x_off }
}

impl OrderedInstance {
    /// Off-diagonal X_ij in sorted coordinates, i != j.
    #[inline]
    pub fn x(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.x_off[strict_index(self.n, a, b)]
    }

    pub fn reconstruct(&self) -> GoeMatrix {
        let mut m = GoeMatrix::zeros(self.n);
        for i in 0..self.n {
            m.set(self.perm[i], self.perm[i], self.z[i]);
            for j in i + 1..self.n {
                m.set(self.perm[i], self.perm[j], self.x(i, j));
            }
        }
        m
    }
}
