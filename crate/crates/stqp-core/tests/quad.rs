use proptest::prelude::*;
use stqp_core::gauss::{SQRT_2, SQRT_2PI};
use stqp_core::quad::*;
use stqp_core::terms::*;

const ONE: QuadSpec = QuadSpec::ONE_DIM;

fn spec_1e12() -> QuadSpec {
    QuadSpec::ONE_DIM.with_rel_tol(1e-12)
}

#[test]
fn gamma_type_integrals() {
    let spec = spec_1e12();
    let r = integrate_1d(|x| x.powi(3) * (-x).exp(), 0.0, f64::INFINITY, &spec);
    assert!(r.converged && (r.value - 6.0).abs() < 1e-10, "{r:?}");
    let r = integrate_1d(|x| x.powi(4) * (-x).exp(), 0.0, f64::INFINITY, &spec);
    assert!(r.converged && (r.value - 24.0).abs() < 1e-10, "{r:?}");
    let r = integrate_1d(|b| (-2.0 * b.sqrt()).exp(), 0.0, f64::INFINITY, &spec);
    assert!(r.converged && (r.value - 0.5).abs() < 1e-10, "{r:?}");
    let r = integrate_1d(|b| b * (-2.0 * b.sqrt()).exp(), 0.0, f64::INFINITY, &spec);
    assert!(r.converged && (r.value - 0.75).abs() < 1e-10, "{r:?}");
}

#[test]
fn finite_interval_and_breaks() {
    let r = integrate_1d(|x| x.sin(), 0.0, std::f64::consts::PI, &ONE);
    assert!((r.value - 2.0).abs() < 1e-12);
    // kink at 1/3 placed on a break
    let r = integrate_with_breaks(|x| (x - 1.0 / 3.0).abs(), &[0.0, 1.0 / 3.0, 1.0], &ONE);
    assert!((r.value - 5.0 / 18.0).abs() < 1e-14);
    assert_eq!(r.evals, 42);
    let r = integrate_1d(|_| 1.0, 2.0, 2.0, &ONE);
    assert_eq!(r.value, 0.0);
}

#[test]
fn spec_validation() {
    assert!(QuadSpec::new(0.0, 1e-300, 10).is_err());
    assert!(QuadSpec::new(1e-8, -1.0, 10).is_err());
    assert!(QuadSpec::new(1e-8, 1e-300, 0).is_err());
    assert!(QuadSpec::new(1e-8, 1e-300, 10).is_ok());
}

#[test]
fn error_estimate_meets_tolerance_when_converged() {
    for f in [
        (|x: f64| (-x * x).exp()) as fn(f64) -> f64,
        |x: f64| 1.0 / (1.0 + x * x),
        |x: f64| x.sqrt() * (-x).exp(),
    ] {
        let r = integrate_1d(f, 0.0, f64::INFINITY, &ONE);
        assert!(r.converged);
        assert!(r.err_est >= 0.0);
        assert!(r.err_est <= ONE.rel_tol * r.value.abs() + ONE.abs_tol);
    }
}

#[test]
fn beta_log_identities() {
    for n in [1u64, 10, 1000, 1_000_000] {
        let r0 = beta_log(n, 0.0, 0.0, &ONE).unwrap();
        assert!((r0.value - 1.0).abs() < 1e-10, "n={n}: {}", r0.value);
        let r1 = beta_log(n, 1.0, 0.0, &ONE).unwrap();
        assert!((r1.value - 1.0 / (n as f64 + 1.0)).abs() < 1e-10, "n={n}");
    }
    let n: f64 = 1e6;
    let r = beta_log(1_000_000, 2.0, 0.5, &ONE).unwrap();
    let lead = 2.0 / (n * n) * n.ln().sqrt();
    assert!((r.value / lead - 1.0).abs() < 0.1);
    assert!((beta_log_asymptote(n, 2.0, 0.5) - lead).abs() < 1e-12 * lead);
    assert!(beta_log(0, 0.0, 0.0, &ONE).is_err());
    assert!(beta_log(5, -1.0, 0.0, &ONE).is_err());
}

#[test]
fn normal_vs_min_identities() {
    for n in [1u64, 10, 1000, 1_000_000] {
        let r = normal_vs_min(n, 1.0, &ONE).unwrap();
        assert!((r.value - 1.0 / (n as f64 + 1.0)).abs() < 1e-10, "n={n}");
    }
    let a = normal_vs_min(10_000, SQRT_2, &ONE).unwrap().value;
    let b = qn_moment(10_000, 1, &ONE).unwrap().value;
    assert!((a - b).abs() < 1e-10 && (a / b - 1.0).abs() < 1e-7);

    let n: f64 = 1e6;
    let r = normal_vs_min(1_000_000, SQRT_2, &ONE).unwrap();
    let lead = 2.0 * SQRT_2PI * n.ln().sqrt() / (n * n);
    assert!((r.value / lead - 1.0).abs() < 0.1);
    assert!((normal_vs_min_asymptote(n, SQRT_2) / lead - 1.0).abs() < 1e-12);
    assert!(normal_vs_min(10, 0.5, &ONE).is_err());
}

#[test]
fn qn_moment_examples() {
    let a = qn_moment(2, 1, &ONE).unwrap().value;
    let b = normal_vs_min(2, SQRT_2, &ONE).unwrap().value;
    assert!((a - b).abs() < 1e-12);
    // n⁴ E q² / log n rises toward 48π from below (102 at n = 10³)
    let n: f64 = 1e3;
    let m2 = qn_moment(1000, 2, &ONE).unwrap().value;
    assert!((m2 / 7.064_698_976_673_59e-10 - 1.0).abs() < 1e-8, "{m2}");
    assert!(m2 <= 48.0 * std::f64::consts::PI * n.ln() / n.powi(4));
    assert!(qn_moment(10, 3, &ONE).is_err());
    assert!(qn_moment(1, 1, &ONE).is_err());
}

#[test]
fn s_term_examples() {
    assert_eq!(s_term(1, &ONE).unwrap().value, 0.0);
    let s2 = s_term(2, &ONE).unwrap().value;
    assert!((s2 - qn_moment(2, 1, &ONE).unwrap().value).abs() < 1e-12);
    // values agree with an independent mpmath evaluation
    for (n, want) in [
        (2u64, 0.304_086_723_985_1),
        (6, 0.290_906_729_714_353_4),
        (200, 0.042_834_316_389_271_61),
        (1000, 0.011_110_571_741_267_18),
    ] {
        let got = s_term(n, &ONE).unwrap().value;
        assert!((got / want - 1.0).abs() < 1e-8, "n={n}: {got}");
    }
    let n: f64 = 1e6;
    let r = s_term(1_000_000, &ONE).unwrap().value * n / n.ln().sqrt();
    assert!((0.88..=1.0).contains(&(r / S_CONST)));
}

#[test]
fn s_refined_examples() {
    let s6 = s_term(1_000_000, &ONE).unwrap().value;
    let gap6 = (s6 - s_refined(1_000_000).unwrap()).abs() / s6;
    assert!(gap6 <= 0.05);
    let s3 = s_term(1000, &ONE).unwrap().value;
    let gap3 = (s3 - s_refined(1000).unwrap()).abs() / s3;
    assert!(gap6 < gap3);
    for n in [1000u64, 10_000, 1_000_000, 1_000_000_000] {
        assert!(s_refined(n).unwrap() < asymptote(AsymptoticTerm::S, n as f64, None).unwrap());
    }
    assert!(s_refined(2).is_err());
}

#[test]
fn identity_chain() {
    for n in [2u64, 3, 6, 20, 200, 1000, 100_000] {
        let s = s_term(n, &ONE).unwrap().value;
        let m1 = qn_moment(n, 1, &ONE).unwrap().value;
        let m2 = qn_moment(n, 2, &ONE).unwrap().value;
        let k = (n - 1) as f64;
        assert!(s <= k * m1 * (1.0 + 1e-9), "n={n}");
        assert!(s >= k * m1 - k * k / 2.0 * m2 - 1e-12, "n={n}");
    }
}

#[test]
fn asymptote_examples() {
    let e = std::f64::consts::E;
    let s = asymptote(AsymptoticTerm::S, e, None).unwrap();
    assert!((s - 2.0 * SQRT_2PI / e).abs() < 1e-15);
    assert!((S_CONST - 5.013_256_55).abs() < 1e-8);
    assert!((A_CONST - 3.759_942_41).abs() < 1e-8);
    assert!((B_CONST - 11.279_827_23).abs() < 1e-8);
    assert!((pnk_constant(2) - 3.007_95).abs() < 1e-5);
    assert!(asymptote(AsymptoticTerm::Pnk, 100.0, None).is_err());
    assert!(asymptote(AsymptoticTerm::S, 1.0, None).is_err());
    // partial sums telescope to 6 − 24/(K+3)
    for kk in [10u64, 1000, 100_000] {
        let partial: f64 = (2..=kk).map(pnk_constant).sum::<f64>() / SQRT_2PI;
        assert!((partial + 24.0 / (kk as f64 + 3.0) - 6.0).abs() < 1e-10);
    }
}

#[test]
fn row_union_bound_examples() {
    // Leading order: (1/2)(4π)^(7/4) Γ(11/2) / √(9/2) · (log n)^(7/4) / n^(3/2).
    let n: f64 = 1e4;
    let r = row_union_bound(10_000, 3, &ONE).unwrap();
    assert!((r.value / 0.027_651_927_541_94 - 1.0).abs() < 1e-8, "{}", r.value);
    let lead = 0.5 * (4.0 * std::f64::consts::PI).powf(1.75) * 52.342_777_784_553_52 / 4.5f64.sqrt();
    assert!(r.value <= lead * n.ln().powf(1.75) / n.powf(1.5));
    // a = √(9/2) at k = 3
    let direct = normal_vs_min(9, (4.5f64).sqrt(), &ONE).unwrap().value * 3.0 * 220.0;
    assert!((row_union_bound(12, 3, &ONE).unwrap().value / direct - 1.0).abs() < 1e-12);
    assert!(row_union_bound(12, 2, &ONE).is_err());
    assert!(row_union_bound(12, 12, &ONE).is_err());
}

#[test]
fn chen_peng_examples() {
    let v = chen_peng_bound(10, 2, 1.0).unwrap();
    assert!((v - (10f64.ln() + 0.5)).abs() < 1e-12);
    assert!((v - 2.8026).abs() < 1e-4);
    let n: f64 = 1e3;
    let want = 3.0 / (n + 1.0) * (n.ln() + 0.5).powi(2) * (-0.25f64).exp();
    assert!((chen_peng_bound(1000, 3, 1.0).unwrap() / want - 1.0).abs() < 1e-12);
    let tail: f64 = (4..=40).map(|k| chen_peng_bound(1000, k, 1.0).unwrap()).sum();
    assert!(tail <= 10.0 * n.ln().powi(3) / 1e6, "{tail}");
    assert!(chen_peng_bound(10, 1, 1.0).is_err());
    assert!(chen_peng_bound(10, 2, 0.0).is_err());
}

#[test]
fn bulk_exponent_examples() {
    assert!((bulk_exponent(1e-12).unwrap() - 2.0).abs() < 1e-10);
    assert!((bulk_exponent(0.5).unwrap() - 3.34315).abs() < 1e-5);
    for i in 1..1000 {
        let a = i as f64 / 1000.0;
        assert!(bulk_exponent(a).unwrap() > 2.0 + a);
    }
    assert!(bulk_exponent(0.0).is_err());
    assert!(bulk_exponent(1.0).is_err());
}

#[test]
fn refinement_stability_one_dim() {
    for n in [1000u64, 1_000_000] {
        let coarse = s_term(n, &ONE).unwrap();
        let fine = s_term(n, &ONE.with_rel_tol(ONE.rel_tol / 2.0)).unwrap();
        assert!((coarse.value - fine.value).abs() <= coarse.err_est.max(1e-15 * coarse.value));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probabilities_in_unit_interval(n in 1u64..2_000_000, a in 1.0f64..4.0) {
        let v = normal_vs_min(n, a, &ONE).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&v));
        let s = s_term(n, &ONE).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn polynomial_times_exponential(k in 0i32..6) {
        let r = integrate_1d(|x| x.powi(k) * (-x).exp(), 0.0, f64::INFINITY, &spec_1e12());
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        prop_assert!((r.value / fact - 1.0).abs() < 1e-10);
    }
}
