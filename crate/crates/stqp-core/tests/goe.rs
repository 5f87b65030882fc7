use std::collections::HashSet;

use proptest::prelude::*;
use stqp_core::gauss::normal_cdf;
use stqp_core::goe::*;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[test]
fn same_spec_same_matrix() {
    let a = sample_goe(9, SeedSpec::new(42, 17)).unwrap();
    let b = sample_goe(9, SeedSpec::new(42, 17)).unwrap();
    assert_eq!(a, b);
    let c = sample_goe(9, SeedSpec::new(42, 18)).unwrap();
    assert_ne!(a, c);
    let d = sample_goe(9, SeedSpec::new(43, 17)).unwrap();
    assert_ne!(a, d);
}

#[test]
fn zero_size_is_rejected() {
    assert!(sample_goe(0, SeedSpec::new(1, 0)).is_err());
}

#[test]
fn uniforms_stay_inside_unit_interval() {
    let mut s = derive_stream(0, 0);
    for _ in 0..100_000 {
        let u = s.uniform();
        assert!(u > 0.0 && u < 1.0);
    }
}

#[test]
fn stream_keys_do_not_repeat() {
    let mut seen = HashSet::with_capacity(1_000_000);
    for k in 0..1_000_000u64 {
        let mut s = derive_stream(7, k);
        assert!(seen.insert((s.next_u64(), s.next_u64())), "repeat at {k}");
    }
}

#[test]
fn diagonal_variance_is_one() {
    let xs: Vec<f64> = (0..100_000u64)
        .map(|k| sample_goe(1, SeedSpec::new(11, k)).unwrap().get(0, 0))
        .collect();
    let (m, v) = mean_var(&xs);
    assert!(m.abs() < 4.0 / (xs.len() as f64).sqrt());
    assert!((v - 1.0).abs() < 0.02, "variance {v}");
}

#[test]
fn off_diagonal_variance_is_one_half() {
    let n = 50;
    let mut xs = Vec::new();
    for k in 0..10_000u64 {
        let q = sample_goe(n, SeedSpec::new(5, k)).unwrap();
        xs.push(q.get(3, 17));
        xs.push(q.get(0, 49));
    }
    let (m, v) = mean_var(&xs);
    assert!(m.abs() < 4.0 * (0.5 / xs.len() as f64).sqrt());
    assert!((v - 0.5).abs() < 0.02, "variance {v}");
}

#[test]
fn smallest_diagonal_uniform_has_mean_one_over_n_plus_one() {
    let n = 100;
    let samples = 20_000u64;
    let mins: Vec<f64> = (0..samples)
        .map(|k| {
            let q = sample_goe(n, SeedSpec::new(3, k)).unwrap();
            let z = order_instance(&q).z[0];
            normal_cdf(z).unwrap()
        })
        .collect();
    let (m, v) = mean_var(&mins);
    let se = (v / samples as f64).sqrt();
    let want = 1.0 / (n as f64 + 1.0);
    assert!((m - want).abs() <= 3.0 * se, "mean {m} want {want} se {se}");
}

#[test]
fn sorted_off_diagonal_uncorrelated_with_minimum() {
    let n = 20;
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for k in 0..20_000u64 {
        let inst = order_instance(&sample_goe(n, SeedSpec::new(8, k)).unwrap());
        xs.push(inst.x(0, 1));
        zs.push(inst.z[0]);
    }
    let (mx, vx) = mean_var(&xs);
    let (mz, vz) = mean_var(&zs);
    let cov = xs.iter().zip(&zs).map(|(x, z)| (x - mx) * (z - mz)).sum::<f64>() / (xs.len() as f64 - 1.0);
    let corr = cov / (vx * vz).sqrt();
    assert!(corr.abs() < 0.02, "corr {corr}");
    assert!((vx - 0.5).abs() < 0.03);
}

#[test]
fn order_instance_example() {
    let mut q = GoeMatrix::diagonal(&[3.0, 1.0, 2.0]);
    q.set(0, 1, 0.25);
    q.set(1, 2, -0.5);
    q.set(0, 2, 0.75);
    let inst = order_instance(&q);
    assert_eq!(inst.z, vec![1.0, 2.0, 3.0]);
    assert_eq!(inst.perm, vec![1, 2, 0]);
    assert_eq!(inst.x(0, 1), -0.5);
    assert_eq!(inst.x(0, 2), 0.25);
    assert_eq!(inst.x(1, 2), 0.75);
    assert_eq!(inst.x(2, 1), 0.75);
}

#[test]
fn ties_keep_original_order() {
    assert_eq!(sort_order(&[1.0, 0.0, 1.0, 0.0]), vec![1, 3, 0, 2]);
}

#[test]
fn from_rows_checks_symmetry() {
    let rows = vec![vec![1.0, 2.0], vec![2.0 + 1e-13, 3.0]];
    let q = GoeMatrix::from_rows(&rows, 1e-12).unwrap();
    assert!((q.get(1, 0) - (2.0 + 0.5e-13)).abs() < 1e-15);
    let bad = vec![vec![1.0, 2.0], vec![2.1, 3.0]];
    assert!(GoeMatrix::from_rows(&bad, 1e-12).is_err());
    let ragged = vec![vec![1.0, 2.0], vec![2.0]];
    assert!(GoeMatrix::from_rows(&ragged, 1e-12).is_err());
}

#[test]
fn quadratic_form_matches_rows() {
    let q = sample_goe(6, SeedSpec::new(1, 1)).unwrap();
    let rows = q.to_rows();
    let x = [0.1, 0.2, 0.05, 0.3, 0.25, 0.1];
    let mut want = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            want += rows[i][j] * x[i] * x[j];
        }
    }
    assert!((q.quadratic_form(&x) - want).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reconstruction_is_exact(n in 1usize..30, seed in any::<u64>(), idx in any::<u64>()) {
        let q = sample_goe(n, SeedSpec::new(seed, idx)).unwrap();
        let inst = order_instance(&q);
        prop_assert_eq!(inst.reconstruct(), q);
        for w in inst.z.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn sampling_is_deterministic(n in 1usize..12, seed in any::<u64>(), idx in any::<u64>()) {
        let a = sample_goe(n, SeedSpec::new(seed, idx)).unwrap();
        let b = sample_goe(n, SeedSpec::new(seed, idx)).unwrap();
        prop_assert_eq!(a, b);
    }
}
