use stqp::census::{confidence_interval, merge, run_census, CensusError, ExperimentConfig, Level, Mode, Proportion};
use stqp_core::quad::QuadSpec;
use stqp_core::terms;

fn edges(n: usize, samples: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(Mode::Edges, n, samples, seed)
}

#[test]
fn interval_examples() {
    let (lo, hi) = confidence_interval(0.5, 0.01, Level::P95);
    assert!((lo - 0.4804).abs() < 5e-5 && (hi - 0.5196).abs() < 5e-5);
    assert_eq!(Proportion::new(0, 1000).interval(Level::P95), (0.0, 0.003));
    assert_eq!(confidence_interval(0.25, 0.0, Level::P99), (0.25, 0.25));
    let (lo, hi) = Proportion::new(1, 4).interval(Level::P99);
    assert!(lo >= 0.0 && hi <= 1.0);
}

#[test]
fn validation() {
    let e = run_census(&ExperimentConfig::new(Mode::Exact, 26, 10, 0)).unwrap_err();
    assert!(matches!(&e, CensusError::Config(m) if m.contains("edges")));
    assert!(run_census(&ExperimentConfig::new(Mode::Heuristic, 30, 10, 0)).is_err());
    assert!(run_census(&edges(5, 0, 0)).is_err());
    assert!(run_census(&ExperimentConfig::new(Mode::OneRow, 10, 10, 0)).is_err());
    assert!(run_census(&ExperimentConfig::new(Mode::OneRow, 10, 10, 0).with_k(10)).is_err());
    assert!(run_census(&ExperimentConfig::new(Mode::OneRow, 10, 10, 0).with_k(0)).is_err());
    assert!(run_census(&ExperimentConfig::new(Mode::OneRow, 10, 10, 0).with_k(9)).is_ok());
    assert!(run_census(&edges(200, 1, 0)).is_ok());
}

#[test]
fn worker_invariance() {
    for cfg in [
        edges(40, 20_000, 3),
        ExperimentConfig::new(Mode::Exact, 6, 9000, 4),
        ExperimentConfig::new(Mode::OneRow, 30, 9000, 5).with_k(2),
        ExperimentConfig::new(Mode::Heuristic, 5, 9000, 6),
    ] {
        let base = run_census(&cfg).unwrap();
        for w in [4, 16] {
            let r = run_census(&cfg.clone().with_workers(w)).unwrap();
            assert!(base.same_estimates(&r), "{} with {w} workers", cfg.mode);
        }
    }
}

#[test]
fn merge_rules() {
    let full = run_census(&edges(25, 6000, 8)).unwrap();
    let a = run_census(&edges(25, 2500, 8)).unwrap();
    let b = run_census(&edges(25, 3500, 8).with_first_index(2500)).unwrap();
    let m = merge(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(m.metadata.ranges, vec![[0, 6000]]);
    assert_eq!(m.metadata.samples, 6000);
    for (name, p) in &full.indicators {
        assert_eq!(m.indicator(name).count, p.count, "{name}");
        assert_eq!(m.indicator(name).trials, p.trials, "{name}");
    }
    for (name, s) in &full.rao_blackwell {
        let got = m.stat(name).mean;
        assert!((got - s.mean).abs() <= 1e-15 * s.mean.abs().max(1e-300), "{name}: {got} vs {}", s.mean);
    }

    let single = merge(std::slice::from_ref(&full)).unwrap();
    assert!(single.same_estimates(&full));

    let c = run_census(&edges(25, 1000, 8).with_first_index(6000)).unwrap();
    let left = merge(&[merge(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
    let right = merge(&[a.clone(), merge(&[b.clone(), c.clone()]).unwrap()]).unwrap();
    assert_eq!(left.indicators, right.indicators);
    for (name, s) in &left.rao_blackwell {
        assert!((s.mean - right.stat(name).mean).abs() <= 1e-15 * s.mean.abs().max(1e-300));
    }

    assert!(matches!(merge(&[a.clone(), a.clone()]), Err(CensusError::Merge(_))));
    let other = run_census(&edges(25, 100, 9).with_first_index(9000)).unwrap();
    assert!(merge(&[a.clone(), other]).is_err());
    let other = run_census(&edges(24, 100, 8).with_first_index(9000)).unwrap();
    assert!(merge(&[a, other]).is_err());
    assert!(merge(&[]).is_err());
}

#[test]
fn exact_n2_matches_edge_probability() {
    let r = run_census(&ExperimentConfig::new(Mode::Exact, 2, 1_000_000, 21).with_workers(4)).unwrap();
    let p = r.indicator("kappa_eq2");
    assert_eq!(r.kappa_count(2), p.count);
    let s = terms::s_term(2, &QuadSpec::ONE_DIM).unwrap().value;
    assert!((p.mean - s).abs() <= 4.0 * p.std_error, "{} vs {s} (se {})", p.mean, p.std_error);
}

#[test]
fn edges_partition_at_n200() {
    let r = run_census(&edges(200, 5000, 22)).unwrap();
    let c = |k: &str| r.indicator(k).count;
    assert_eq!(c("i_s") + c("i_a") + c("i_b"), c("any_edge"));
    assert_eq!(c("partition_violations"), 0);
    let total = r.stat("cond_total").mean;
    let parts = r.stat("cond_s").mean + r.stat("cond_a").mean + r.stat("cond_b").mean;
    assert!((total - parts).abs() <= 1e-12 * total);
}

#[test]
fn exact_row_average_and_sandwich() {
    let r = run_census(&ExperimentConfig::new(Mode::Exact, 10, 100_000, 23)).unwrap();
    let ok = r.indicator("row_average_ok");
    assert_eq!(ok.trials, r.indicator("kappa_gt1").count);
    assert_eq!(ok.count, ok.trials);
    assert_eq!(r.indicator("sandwich_violations").count, 0);
    assert_eq!(r.indicator("partition_violations").count, 0);
    let (eq2, any, gt1) = (
        r.indicator("kappa_eq2").count,
        r.indicator("any_edge").count,
        r.indicator("kappa_gt1").count,
    );
    assert!(eq2 <= any && any <= gt1);
    let hist: u64 = r.kappa_hist.values().sum::<u64>() + r.kappa_overflow;
    assert_eq!(hist, 100_000);
}

#[test]
fn rao_blackwell_reduces_noise() {
    for n in [50, 120] {
        let r = run_census(&edges(n, 20_000, 24)).unwrap();
        assert!(r.stat("cond_a").std_error < r.indicator("i_a").std_error);
        assert!(r.stat("cond_s").std_error < r.indicator("i_s").std_error);
    }
}

#[test]
fn one_row_counts() {
    let r = run_census(&ExperimentConfig::new(Mode::OneRow, 40, 10_000, 25).with_k(3)).unwrap();
    assert_eq!(r.indicator("inclusion_violations").count, 0);
    assert!(r.indicator("any_f").count <= r.indicator("any_e").count);
    let pair = r.indicator("pair_e");
    assert_eq!(pair.trials, 10_000 * 37);
    assert!((r.stat("pair_frequency").mean - pair.mean).abs() < 1e-12);
    assert!((r.stat("p_row").mean - pair.mean).abs() <= 4.0 * pair.std_error.max(r.stat("p_row").std_error));
}

#[test]
fn report_serialization() {
    let r = run_census(&ExperimentConfig::new(Mode::Exact, 4, 3000, 26)).unwrap();
    let back: stqp::census::EstimateReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(stqp::census::EstimateReport::CSV_HEADER));
    let width = stqp::census::EstimateReport::CSV_HEADER.split(',').count();
    for l in lines {
        assert_eq!(l.split(',').count(), width, "{l}");
    }
}
