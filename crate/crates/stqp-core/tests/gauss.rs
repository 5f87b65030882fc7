use proptest::prelude::*;
use stqp_core::gauss::*;

// Reference values from a 40-digit evaluation of erfc and its inverse.
const CDF_1_96: f64 = 0.975_002_104_851_779_6;
const CDF_M8: f64 = 6.220_960_574_271_784e-16;
const Q_1E_10: f64 = -6.361_340_902_404_056;
const Q_0_9750021049: f64 = 1.960_000_000_825_113_9;
const PSI_0_01: f64 = 5.010_211_018_508_413e-4;
const TAIL_2: f64 = 0.022_750_131_948_179_21;
const TAIL_HALF: f64 = 0.308_537_538_725_986_9;

#[test]
fn cdf_examples() {
    assert_eq!(normal_cdf(0.0).unwrap(), 0.5);
    assert!((normal_cdf(1.96).unwrap() - CDF_1_96).abs() < 1e-14);
    let tail = normal_cdf(-8.0).unwrap();
    assert!((tail / CDF_M8 - 1.0).abs() < 1e-10);
    assert!((normal_pdf(0.0).unwrap() - 1.0 / SQRT_2PI).abs() < 1e-16);
}

#[test]
fn cdf_rejects_non_finite() {
    assert!(normal_cdf(f64::NAN).is_err());
    assert!(normal_cdf(f64::INFINITY).is_err());
    assert!(normal_pdf(f64::NEG_INFINITY).is_err());
}

#[test]
fn cdf_is_strictly_increasing_on_a_grid() {
    let mut prev = normal_cdf(-37.5).unwrap();
    let mut x = -37.5;
    while x < 7.0 {
        x += 0.01;
        let c = normal_cdf(x).unwrap();
        assert!(c > prev, "at {x}");
        prev = c;
    }
}

#[test]
fn quantile_examples() {
    assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    assert!((normal_quantile(0.975_002_104_9).unwrap() - 1.96).abs() < 1e-9);
    assert!((normal_quantile(0.975_002_104_9).unwrap() - Q_0_9750021049).abs() < 1e-12);
    assert!((normal_quantile(1e-10).unwrap() - Q_1E_10).abs() < 1e-6);
    assert!((normal_quantile(1e-10).unwrap() - Q_1E_10).abs() < 1e-12);
}

#[test]
fn quantile_rejects_endpoints() {
    for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
        assert!(normal_quantile(p).is_err());
    }
}

#[test]
fn mills_examples() {
    let (lo, hi) = mills_interval(2.0).unwrap();
    assert!((lo - 0.021_596_386_605_275).abs() < 1e-13);
    assert!((hi - 0.026_995_483_256_594).abs() < 1e-13);
    assert!(lo < TAIL_2 && TAIL_2 < hi);

    let (lo, hi) = mills_interval(10.0).unwrap();
    assert!((hi / lo - 1.01).abs() < 1e-12);
    let tail = normal_cdf(-10.0).unwrap();
    assert!((tail / 7.619_853_024_160_5e-24 - 1.0).abs() < 1e-12);
    assert!((hi - lo) / tail <= 0.02);

    let (lo, hi) = mills_interval(0.5).unwrap();
    assert!((lo - 0.140_826_130_7).abs() < 1e-9);
    assert!((hi - 0.704_130_653_5).abs() < 1e-9);
    assert!(lo < TAIL_HALF && TAIL_HALF < hi);

    assert!(mills_interval(0.0).is_err());
    assert!(mills_interval(-1.0).is_err());
}

#[test]
fn psi_examples() {
    assert_eq!(psi(0.5).unwrap(), 0.5);
    assert!((psi(0.01).unwrap() - PSI_0_01).abs() < 1e-12);
    let u: f64 = 1e-8;
    let lead = SQRT_2PI * u * u * (1.0 / u).ln().sqrt();
    assert!((psi(u).unwrap() / lead - 1.0).abs() < 0.15);
    assert!(psi(0.0).is_err());
    assert!(psi(1.0).is_err());
}

#[test]
fn psi_refined_examples() {
    // psi / psi_refined from the 40-digit reference
    let cases = [
        (1e-4, 0.988_552_140_524),
        (1e-6, 0.995_086_861_564),
        (1e-8, 0.997_297_373_968),
        (1e-10, 0.998_297_122_572),
        (1e-12, 0.998_831_111_509),
    ];
    let mut prev_gap = f64::INFINITY;
    for (u, want) in cases {
        let ratio = psi(u).unwrap() / psi_refined(u).unwrap();
        assert!((ratio - want).abs() < 1e-9, "u={u}: {ratio}");
        let gap = (ratio - 1.0).abs();
        assert!(gap < prev_gap);
        prev_gap = gap;
    }
    assert!(psi_refined(0.5).is_err());
    assert!(psi_refined(0.7).is_err());
}

#[test]
fn tail_scale_examples() {
    let t = tail_scale(2, 1.0).unwrap();
    assert_eq!(t.s, 0.0);
    assert!((t.big_l - 2f64.ln()).abs() < 1e-15);
    assert!((t.ell - 1.0 - 2f64.ln()).abs() < 1e-15);

    let n = 1_000_000u64;
    let t = tail_scale(n, 1.0).unwrap();
    let ln_n = (n as f64).ln();
    assert!((t.s * t.s / (2.0 * ln_n) - 1.0).abs() <= 0.25);
    let nf = n as f64;
    let id = nf * nf * (-t.s * t.s).exp() / (t.s * t.s);
    assert!((id / (2.0 * std::f64::consts::PI) - 1.0).abs() <= 0.15);

    assert!(tail_scale(10, 0.0).is_err());
    assert!(tail_scale(10, 10.0).is_err());
    assert!(tail_scale(1, 0.5).is_err());
    let t = tail_scale(10, 7.0).unwrap();
    assert_eq!(t.ell, 1.0 + t.big_l);
    assert!(t.s < 0.0);
}

#[test]
fn quantile_gap_examples() {
    let g = quantile_gap(0.01, 0.01).unwrap();
    assert_eq!(g.h, 0.0);

    let n = 1e8;
    let s = -normal_quantile(1.0 / n).unwrap();
    let v = (1.0 + 1.0 / (s * s)) / n;
    let g = quantile_gap(1.0 / n, v).unwrap();
    assert!((g.s.powi(3) * g.h - 1.0).abs() <= 0.2);

    let n = 1e6;
    let g = quantile_gap(1.0 / n, 10.0 / n).unwrap();
    assert!(g.s * g.h >= 0.6 * 10f64.ln());

    assert!(quantile_gap(0.2, 0.1).is_err());
}

#[test]
fn psi_envelope_constant() {
    // Largest ratio Ψ(u) / (u² √log(1/u)) on a log grid over (0, 1/2].
    let mut worst: f64 = 0.0;
    // u² stays representable down to 1e-150
    let mut lu = -150.0f64;
    while lu < 0.5f64.log10() {
        let u = 10f64.powf(lu);
        let r = psi(u).unwrap() / (u * u * (1.0 / u).ln().sqrt());
        worst = worst.max(r);
        lu += 0.01;
    }
    let u: f64 = 0.5;
    worst = worst.max(psi(u).unwrap() / (u * u * (1.0 / u).ln().sqrt()));
    assert!(worst <= 3.0, "fitted constant {worst}");
}

#[test]
fn psi_below_identity_on_lower_half() {
    let mut u = 1e-6;
    while u <= 0.5 {
        assert!(psi(u).unwrap() <= u);
        u *= 1.1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn quantile_round_trip(lp in -300.0f64..0.0, upper in any::<bool>()) {
        let p = 10f64.powf(lp);
        let p = if upper { (1.0 - p).clamp(0.5, 1.0 - 1e-13) } else { p };
        prop_assume!(p > 0.0 && p < 1.0);
        let x = normal_quantile(p).unwrap();
        prop_assert!((normal_cdf(x).unwrap() - p).abs() <= 1e-13);
    }

    #[test]
    fn mills_sandwich(x in 1e-6f64..40.0) {
        let (lo, hi) = mills_interval(x).unwrap();
        let tail = normal_cdf(-x).unwrap();
        prop_assert!(lo <= tail * (1.0 + 1e-12) && tail <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn near_gap_is_of_order_beta_over_s_cubed(xi in 0usize..3, frac in 0.0f64..=1.0) {
        let n = 1e6;
        let x = [0.1, 1.0, 10.0][xi];
        let s = -normal_quantile(x / n).unwrap();
        let beta = frac * s * s / 2.0;
        prop_assume!(beta > 0.0);
        let v = x * (1.0 + beta / (s * s)) / n;
        let g = quantile_gap(x / n, v).unwrap();
        let r = g.h / (beta / s.powi(3));
        prop_assert!((0.2..=5.0).contains(&r), "ratio {}", r);
    }

    #[test]
    fn gap_is_nonnegative(a in 1e-12f64..0.999, b in 1e-12f64..0.999) {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        let g = quantile_gap(u, v).unwrap();
        prop_assert!(g.h >= 0.0);
        prop_assert_eq!(g.h == 0.0, u == v);
    }

    #[test]
    fn psi_is_monotone(a in 1e-9f64..0.999, b in 1e-9f64..0.999) {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(psi(u).unwrap() <= psi(v).unwrap());
    }
}
