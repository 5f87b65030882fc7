//! Globally adaptive Gauss–Kronrod (21-point) quadrature.
//!
//! Panels live in a max-heap keyed by their error estimate; the worst panel is
//! bisected until the summed error meets `max(abs_tol, rel_tol·|value|)` or the
//! panel budget runs out. An infinite upper limit is handled by the algebraic
//! map x = a + t/(1−t) on t ∈ [0, 1).

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadSpec {
    /// Defaults for single integrals.
    pub const ONE_DIM: QuadSpec = QuadSpec {
        rel_tol: 1e-8,
        abs_tol: 1e-300,
        max_subdivisions: 2000,
    };
    /// Defaults for the outer level of nested integrals.
    pub const NESTED: QuadSpec = QuadSpec {
        rel_tol: 1e-5,
        abs_tol: 1e-300,
        max_subdivisions: 2000,
    };

    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(domain("rel_tol", rel_tol, "(0, inf)"));
        }
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(domain("abs_tol", abs_tol, "(0, inf)"));
        }
        if max_subdivisions == 0 {
            return Err(domain("max_subdivisions", 0.0, "[1, inf)"));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }

    /// Tolerance target for a given value.
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self::ONE_DIM
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub evals: u64,
    pub converged: bool,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        err_est: 0.0,
        evals: 0,
        converged: true,
    };

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            ..Self::ZERO
        }
    }

    /// Multiplies value and error by a nonnegative factor.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            err_est: self.err_est * factor.abs(),
            ..self
        }
    }

    /// Turns a flagged result into an error carrying the best estimate.
    pub fn require_converged(self) -> core::result::Result<Self, Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(self)
        }
    }
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// One 21-point Kronrod panel with the embedded 10-point Gauss error.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * libm::pow(200.0 * err / resasc, 1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over [a, b]; `b` may be `f64::INFINITY`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> QuadResult {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Integrates over consecutive panels delimited by `breaks` (nondecreasing;
/// the last entry may be `f64::INFINITY`). Zero-width panels are skipped.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    spec: &QuadSpec,
) -> QuadResult {
    let mut evals = 0u64;
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut settled: Vec<Panel> = Vec::new();
    if breaks.len() < 2 {
        return QuadResult::ZERO;
    }
    let last = breaks.len() - 1;
    let infinite = breaks[last] == f64::INFINITY;
    let origin = if infinite { breaks[last - 1] } else { 0.0 };
    // Finite panels in x; the infinite tail in t with x = origin + t/(1-t).
    let mut eval = |x_or_t: f64, tail: bool, evals: &mut u64| -> f64 {
        *evals += 1;
        if tail {
            let t = x_or_t;
            let omt = 1.0 - t;
            let v = f(origin + t / omt) / (omt * omt);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        } else {
            f(x_or_t)
        }
    };

    let mut panels: Vec<(f64, f64, bool)> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == f64::INFINITY {
            panels.push((0.0, 1.0, true));
        } else if b > a {
            panels.push((a, b, false));
        }
    }
    // Tail panels are tracked separately since they integrate in t.
    let mut tail_heap: BinaryHeap<Panel> = BinaryHeap::new();
    for &(a, b, tail) in &panels {
        let (value, err) = gk21(&mut |x| eval(x, tail, &mut evals), a, b);
        let p = Panel { a, b, value, err };
        if tail {
            tail_heap.push(p);
        } else {
            heap.push(p);
        }
    }

    let total = |heap: &BinaryHeap<Panel>, tail: &BinaryHeap<Panel>, settled: &[Panel]| {
        let mut v = 0.0;
        let mut e = 0.0;
        for p in heap.iter().chain(tail.iter()).chain(settled.iter()) {
            v += p.value;
            e += p.err;
        }
        (v, e)
    };

    let (mut value, mut err) = total(&heap, &tail_heap, &settled);
    let mut count = heap.len() + tail_heap.len();
    let mut converged = err <= spec.target(value);
    while !converged && count < spec.max_subdivisions {
        let from_tail = match (heap.peek(), tail_heap.peek()) {
            (Some(p), Some(q)) => q.err > p.err,
            (None, Some(_)) => true,
            (Some(_), None) => false,
            (None, None) => break,
        };
        let worst = if from_tail {
            tail_heap.pop()
        } else {
            heap.pop()
        };
        let Some(worst) = worst else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 4.0 * f64::EPSILON * mid.abs() {
            settled.push(worst);
            continue;
        }
        let (v1, e1) = gk21(&mut |x| eval(x, from_tail, &mut evals), worst.a, mid);
        let (v2, e2) = gk21(&mut |x| eval(x, from_tail, &mut evals), mid, worst.b);
        value += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        let left = Panel { a: worst.a, b: mid, value: v1, err: e1 };
        let right = Panel { a: mid, b: worst.b, value: v2, err: e2 };
        if from_tail {
            tail_heap.push(left);
            tail_heap.push(right);
        } else {
            heap.push(left);
            heap.push(right);
        }
        count += 1;
        if err <= spec.target(value) {
            // Re-sum to shed drift before accepting.
            let (v, e) = total(&heap, &tail_heap, &settled);
            value = v;
            err = e;
            converged = err <= spec.target(value);
        }
    }
    let (value, err) = total(&heap, &tail_heap, &settled);
    QuadResult {
        value,
        err_est: err,
        evals,
        converged: converged && value.is_finite(),
    }
}

/// Break points `base·ratio^k` strictly inside (lo, hi), plus both ends.
pub fn geometric_breaks(lo: f64, hi: f64, base: f64, ratio: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(lo);
    let mut p = base;
    while p < hi {
        if p > lo {
            out.push(p);
        }
        p *= ratio;
    }
    out.push(hi);
}

/// Merges extra interior points into a sorted break list.
pub fn insert_breaks(breaks: &mut Vec<f64>, extra: &[f64]) {
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    for &p in extra {
        if p > lo && p < hi {
            breaks.push(p);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
}

pub(crate) fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value: v })
    }
}
