//! Quick property suites behind `stqp check`. Each suite takes a few seconds
//! and exercises the invariants of one module on fresh seeded samples.

use std::str::FromStr;

use stqp_core::events::{classify_edges, EdgeWorkspace};
use stqp_core::gauss::{self, SQRT_2};
use stqp_core::goe::{derive_stream, order_instance, sample_goe, GoeMatrix, SeedSpec};
use stqp_core::quad::QuadSpec;
use stqp_core::{solver, terms};

use crate::census::{self, ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Toolbox,
    Solver,
    Events,
    Quadrature,
    Census,
    All,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "toolbox" => Ok(Suite::Toolbox),
            "solver" => Ok(Suite::Solver),
            "events" => Ok(Suite::Events),
            "quadrature" => Ok(Suite::Quadrature),
            "census" => Ok(Suite::Census),
            "all" => Ok(Suite::All),
            _ => Err(format!(
                "unknown suite '{s}' (expected toolbox, solver, events, quadrature, census or all)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Recorder {
    suite: &'static str,
    out: Vec<CheckOutcome>,
}

impl Recorder {
    fn check(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.out.push(CheckOutcome {
            suite: self.suite,
            name,
            passed,
            detail: detail.into(),
        });
    }
}

pub fn run(suite: Suite) -> Vec<CheckOutcome> {
    let all = [Suite::Toolbox, Suite::Solver, Suite::Events, Suite::Quadrature, Suite::Census];
    let chosen: Vec<Suite> = if suite == Suite::All { all.to_vec() } else { vec![suite] };
    let mut out = Vec::new();
    for s in chosen {
        let mut r = Recorder {
            suite: match s {
                Suite::Toolbox => "toolbox",
                Suite::Solver => "solver",
                Suite::Events => "events",
                Suite::Quadrature => "quadrature",
                Suite::Census => "census",
                Suite::All => unreachable!(),
            },
            out: Vec::new(),
        };
        match s {
            Suite::Toolbox => toolbox(&mut r),
            Suite::Solver => solver_suite(&mut r),
            Suite::Events => events(&mut r),
            Suite::Quadrature => quadrature(&mut r),
            Suite::Census => census_suite(&mut r),
            Suite::All => unreachable!(),
        }
        out.extend(r.out);
    }
    out
}

fn toolbox(r: &mut Recorder) {
    let mut worst: f64 = 0.0;
    let mut lp = -300.0;
    while lp < 0.0 {
        let p = 10f64.powf(lp);
        let x = gauss::normal_quantile(p).unwrap();
        worst = worst.max((gauss::normal_cdf(x).unwrap() - p).abs());
        lp += 0.37;
    }
    r.check("quantile round trip", worst <= 1e-13, format!("max error {worst:e}"));

    let mut s = derive_stream(0, 0);
    let mut bad = 0;
    for _ in 0..10_000 {
        let x = 40.0 * s.uniform();
        let (lo, hi) = gauss::mills_interval(x).unwrap();
        let t = gauss::normal_cdf(-x).unwrap();
        if !(lo <= t * (1.0 + 1e-12) && t <= hi * (1.0 + 1e-12)) {
            bad += 1;
        }
    }
    r.check("Mills sandwich", bad == 0, format!("{bad} violations in 10000"));

    let mut bad = 0;
    let mut u = 1e-150;
    while u < 0.5 {
        let p = gauss::psi(u).unwrap();
        if !(p <= u && p <= 3.0 * u * u * (1.0 / u).ln().sqrt()) {
            bad += 1;
        }
        u *= 1.5;
    }
    r.check("psi envelope", bad == 0, format!("{bad} violations"));
}

fn solver_suite(r: &mut Recorder) {
    let mut s = derive_stream(1, 0);
    let mut bad = 0;
    for _ in 0..10_000 {
        let mut v = [s.standard_normal(), s.standard_normal(), s.standard_normal()];
        v.sort_by(f64::total_cmp);
        let b = 2.0 * s.standard_normal();
        let tau = solver::two_point_threshold(v[0], v[1], v[2]).unwrap();
        if (solver::edge_min(v[1], b, v[2]).value < v[0]) != (b < tau) && (b - tau).abs() > 1e-9 {
            bad += 1;
        }
    }
    r.check("threshold equivalence", bad == 0, format!("{bad} disagreements in 10000"));

    let q = GoeMatrix::diagonal(&[1.0, 2.0, 4.0]);
    let v = solver::solve_enumerate(&q, None).unwrap();
    r.check(
        "diagonal closed form",
        v.kappa == 3 && (v.value - 4.0 / 7.0).abs() < 1e-15,
        format!("kappa {} value {}", v.kappa, v.value),
    );

    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let q = sample_goe(5, SeedSpec::new(5, k)).unwrap();
        let a = solver::solve_enumerate(&q, None).unwrap().value;
        let b = solver::grid_oracle(&q, 60).unwrap();
        worst = worst.max((a - b).abs());
    }
    r.check("grid oracle agreement", worst <= 1e-6, format!("max gap {worst:e}"));

    let mut bad = 0;
    for k in 0..2000 {
        let q = sample_goe(6, SeedSpec::new(6, k)).unwrap();
        let x = solver::solve_enumerate(&q, None).unwrap();
        let dmin = (0..6).map(|i| q.get(i, i)).fold(f64::INFINITY, f64::min);
        let outside_ok = (0..6).filter(|i| !x.support.contains(i)).all(|row| {
            x.support.iter().map(|&j| q.get(row, j) * x.x[j]).sum::<f64>() >= x.value - 1e-9
        });
        let row_ok = x.kappa == 1 || solver::row_average_ok(&q, &x.support).unwrap();
        if x.value > dmin || !outside_ok || !row_ok {
            bad += 1;
        }
    }
    r.check("optimality certificates", bad == 0, format!("{bad} failures in 2000"));
}

fn events(r: &mut Recorder) {
    let n = 30;
    let mut ws = EdgeWorkspace::new(n).unwrap();
    let mut bad = 0;
    for k in 0..2000 {
        let e = ws.classify(SeedSpec::new(30, k));
        let z = ws.z();
        let mut log_keep = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let p = gauss::normal_cdf(SQRT_2 * stqp_core::events::threshold(z, i, j)).unwrap();
                log_keep += (1.0 - p).ln();
            }
        }
        let total = e.cond_s + e.cond_a + e.cond_b;
        let classes = e.i_s as u8 + e.i_a as u8 + e.i_b as u8;
        if (total - (1.0 - log_keep.exp())).abs() > 1e-12
            || (classes == 1) != e.any_edge
            || classes > 1
            || e.cond_a > e.sum_p2 + 1e-15
            || e.cond_b > e.sum_p3 + 1e-15
        {
            bad += 1;
        }
    }
    r.check("partition and product identity", bad == 0, format!("{bad} failures in 2000"));

    let mut ws = EdgeWorkspace::new(10).unwrap();
    let mut bad = 0;
    for k in 0..500 {
        let spec = SeedSpec::new(10, k);
        if ws.classify(spec) != classify_edges(&order_instance(&sample_goe(10, spec).unwrap())) {
            bad += 1;
        }
    }
    r.check("fast path matches full instance", bad == 0, format!("{bad} mismatches in 500"));

    let mut ws = EdgeWorkspace::new(50).unwrap();
    let bad: u32 = (0..2000).map(|k| ws.row_events(SeedSpec::new(50, k), 2).unwrap().violations).sum();
    r.check("one-row inclusion", bad == 0, format!("{bad} violating pairs"));
}

fn quadrature(r: &mut Recorder) {
    let spec = QuadSpec::ONE_DIM;
    let mut worst: f64 = 0.0;
    for n in [1u64, 10, 1000, 1_000_000] {
        let target = 1.0 / (n as f64 + 1.0);
        worst = worst.max((terms::normal_vs_min(n, 1.0, &spec).unwrap().value - target).abs());
        worst = worst.max((terms::beta_log(n, 1.0, 0.0, &spec).unwrap().value - target).abs());
        worst = worst.max((terms::beta_log(n, 0.0, 0.0, &spec).unwrap().value - 1.0).abs());
    }
    r.check("exchangeability identities", worst <= 1e-10, format!("max error {worst:e}"));

    let mut bad = 0;
    for n in [2u64, 6, 200, 10_000] {
        let s = terms::s_term(n, &spec).unwrap().value;
        let m1 = terms::qn_moment(n, 1, &spec).unwrap().value;
        let m2 = terms::qn_moment(n, 2, &spec).unwrap().value;
        let k = (n - 1) as f64;
        if !(s <= k * m1 * (1.0 + 1e-9) && s >= k * m1 - k * k / 2.0 * m2 - 1e-12) {
            bad += 1;
        }
    }
    r.check("linearization chain", bad == 0, format!("{bad} failures"));

    let g = terms::g_at(1e-3, 1e-3, &spec).unwrap().value;
    let p = gauss::psi(1e-3).unwrap();
    r.check("G on the diagonal", (g - p).abs() <= 1e-15 * p, format!("{g} vs {p}"));

    let a = terms::a_term_exact(6, &QuadSpec::NESTED).unwrap();
    r.check(
        "exact A at n = 6",
        a.converged && (a.value - 0.025_679_204_072_13).abs() < 1e-8,
        format!("{}", a.value),
    );
}

fn census_suite(r: &mut Recorder) {
    let cfg = ExperimentConfig::new(Mode::Edges, 20, 3000, 9);
    let one = census::run_census(&cfg).unwrap();
    let four = census::run_census(&cfg.clone().with_workers(4)).unwrap();
    r.check("worker invariance", one.same_estimates(&four), "1 vs 4 workers");

    let a = census::run_census(&ExperimentConfig::new(Mode::Edges, 20, 1000, 9)).unwrap();
    let b = census::run_census(&ExperimentConfig::new(Mode::Edges, 20, 2000, 9).with_first_index(1000)).unwrap();
    let merged = census::merge(&[a, b]).unwrap();
    let counts_equal = merged.indicators.iter().all(|(k, p)| one.indicator(k).count == p.count);
    r.check("merge of halves", counts_equal, "counts equal to the full run");
}
