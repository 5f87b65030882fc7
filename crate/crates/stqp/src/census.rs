//! Seeded Monte Carlo censuses over GOE instances.
//!
//! Sample `i` always uses the stream `(seed, i)`. Samples are tallied in fixed
//! blocks of [`BLOCK`] consecutive indices and the block tallies are combined
//! in index order, so a report does not depend on how many workers ran it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use stqp_core::events::{classify_edges, EdgeWorkspace};
use stqp_core::goe::{order_instance, sample_goe, SeedSpec};
use stqp_core::solver::{self, DEFAULT_K_MAX, MAX_EXACT_N};

/// Samples per tally block.
pub const BLOCK: u64 = 1024;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CensusError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot merge: {0}")]
    Merge(String),
    #[error(transparent)]
    Core(#[from] stqp_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Edges,
    OneRow,
    Heuristic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Edges => "edges",
            Mode::OneRow => "one_row",
            Mode::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "edges" => Ok(Mode::Edges),
            "one-row" | "one_row" => Ok(Mode::OneRow),
            "heuristic" => Ok(Mode::Heuristic),
            _ => Err(format!("unknown mode '{s}' (expected exact, edges, one-row or heuristic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub mode: Mode,
    /// One-based order index of the row in one-row mode.
    pub k: Option<usize>,
    pub workers: usize,
    /// Index of the first sample; shards of one experiment use disjoint ranges.
    pub first_index: u64,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, n: usize, samples: u64, seed: u64) -> Self {
        Self {
            n,
            samples,
            seed,
            mode,
            k: None,
            workers: 1,
            first_index: 0,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_first_index(mut self, first_index: u64) -> Self {
        self.first_index = first_index;
        self
    }

    pub fn validate(&self) -> Result<(), CensusError> {
        let bad = |m: String| Err(CensusError::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.first_index.checked_add(self.samples).is_none() {
            return bad("sample range overflows u64".into());
        }
        match self.mode {
            Mode::Exact | Mode::Heuristic if self.n > MAX_EXACT_N => bad(format!(
                "{} mode solves exactly and needs n <= {MAX_EXACT_N}; use edges mode for n = {}",
                self.mode, self.n
            )),
            Mode::OneRow => match self.k {
                Some(k) if k >= 1 && k < self.n => Ok(()),
                Some(k) => bad(format!("one-row mode needs 1 <= k < n, got k = {k}")),
                None => bad("one-row mode needs k".into()),
            },
            _ => Ok(()),
        }
    }
}

/// Event frequency with its trial count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub count: u64,
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
}

impl Proportion {
    pub fn new(count: u64, trials: u64) -> Self {
        let (mean, std_error) = if trials == 0 {
            (0.0, 0.0)
        } else {
            let p = count as f64 / trials as f64;
            (p, (p * (1.0 - p) / trials as f64).sqrt())
        };
        Self {
            count,
            trials,
            mean,
            std_error,
        }
    }

    /// Normal interval clipped to [0, 1]; no successes gives (0, 3/N).
    pub fn interval(&self, level: Level) -> (f64, f64) {
        if self.count == 0 && self.trials > 0 {
            return (0.0, (3.0 / self.trials as f64).min(1.0));
        }
        let (lo, hi) = confidence_interval(self.mean, self.std_error, level);
        (lo.max(0.0), hi.min(1.0))
    }
}

/// Sample mean of a real-valued statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStat {
    pub sum: f64,
    pub sum_sq: f64,
    pub samples: u64,
    pub mean: f64,
    pub std_error: f64,
}

impl MeanStat {
    pub fn new(sum: f64, sum_sq: f64, samples: u64) -> Self {
        let (mean, std_error) = match samples {
            0 => (0.0, 0.0),
            1 => (sum, 0.0),
            m => {
                let m = m as f64;
                let mean = sum / m;
                let var = ((sum_sq - sum * mean) / (m - 1.0)).max(0.0);
                (mean, (var / m).sqrt())
            }
        };
        Self {
            sum,
            sum_sq,
            samples,
            mean,
            std_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    P95,
    P99,
}

impl Level {
    pub fn z(self) -> f64 {
        match self {
            Level::P95 => 1.959_963_984_540_054,
            Level::P99 => 2.575_829_303_548_901,
        }
    }
}

/// mean ± z·se.
pub fn confidence_interval(mean: f64, se: f64, level: Level) -> (f64, f64) {
    let half = level.z() * se;
    (mean - half, mean + half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub mode: Mode,
    pub k: Option<usize>,
    pub workers: usize,
    /// Half-open sample index ranges covered, sorted and coalesced.
    pub ranges: Vec<[u64; 2]>,
    pub runtime_seconds: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub metadata: Metadata,
    pub indicators: BTreeMap<String, Proportion>,
    /// Conditional (Rao–Blackwell) terms and other real-valued statistics.
    pub rao_blackwell: BTreeMap<String, MeanStat>,
    /// Support size → count, exact and heuristic modes only.
    pub kappa_hist: BTreeMap<usize, u64>,
    /// Supports larger than the histogram cap.
    pub kappa_overflow: u64,
}

impl EstimateReport {
    pub fn indicator(&self, name: &str) -> &Proportion {
        self.indicators
            .get(name)
            .unwrap_or_else(|| panic!("no indicator '{name}' in {} report", self.metadata.mode))
    }

    pub fn stat(&self, name: &str) -> &MeanStat {
        self.rao_blackwell
            .get(name)
            .unwrap_or_else(|| panic!("no statistic '{name}' in {} report", self.metadata.mode))
    }

    /// Count of samples with support size `kappa`.
    pub fn kappa_count(&self, kappa: usize) -> u64 {
        self.kappa_hist.get(&kappa).copied().unwrap_or(0)
    }

    /// Everything except the timing and worker fields, which legitimately
    /// differ between reruns.
    pub fn same_estimates(&self, other: &Self) -> bool {
        let strip = |r: &Self| {
            let mut r = r.clone();
            r.metadata.runtime_seconds = 0.0;
            r.metadata.workers = 0;
            r
        };
        strip(self) == strip(other)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }

    pub const CSV_HEADER: &'static str = "n,mode,k,seed,samples,statistic,kind,count_or_sum,trials,mean,std_error";

    /// One line per statistic, preceded by [`Self::CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let k = m.k.map(|k| k.to_string()).unwrap_or_default();
        let prefix = format!("{},{},{},{},{}", m.n, m.mode, k, m.seed, m.samples);
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (name, p) in &self.indicators {
            out.push_str(&format!(
                "{prefix},{name},proportion,{},{},{:.12e},{:.12e}\n",
                p.count, p.trials, p.mean, p.std_error
            ));
        }
        for (name, s) in &self.rao_blackwell {
            out.push_str(&format!(
                "{prefix},{name},mean,{:.12e},{},{:.12e},{:.12e}\n",
                s.sum, s.samples, s.mean, s.std_error
            ));
        }
        for (kappa, c) in &self.kappa_hist {
            out.push_str(&format!(
                "{prefix},kappa_{kappa},proportion,{c},{},{:.12e},\n",
                m.samples,
                *c as f64 / m.samples as f64
            ));
        }
        out
    }
}

/// Statistic names per mode. Indicators hold (count, trials) pairs, sums hold
/// (Σx, Σx²) pairs.
struct Layout {
    indicators: &'static [&'static str],
    sums: &'static [&'static str],
    hist: bool,
}

mod ix {
    // exact
    pub const KAPPA_GT1: usize = 0;
    pub const KAPPA_EQ2: usize = 1;
    pub const KAPPA_GE3: usize = 2;
    pub const HEUR_OK: usize = 3;
    pub const ROW_AVG_OK: usize = 4;
    pub const SANDWICH_BAD: usize = 5;
    pub const PARTITION_BAD: usize = 6;
    pub const ANY_EDGE: usize = 7;
    pub const I_S: usize = 8;
    pub const I_A: usize = 9;
    pub const I_B: usize = 10;
    // edges
    pub const E_ANY: usize = 0;
    pub const E_S: usize = 1;
    pub const E_A: usize = 2;
    pub const E_B: usize = 3;
    pub const E_PARTITION_BAD: usize = 4;
    // one-row
    pub const R_ANY_E: usize = 0;
    pub const R_ANY_F: usize = 1;
    pub const R_INCLUSION_BAD: usize = 2;
    pub const R_PAIR_E: usize = 3;
    // heuristic
    pub const H_OK: usize = 0;
    pub const H_KAPPA_GT1: usize = 1;
    // sums shared by exact and edges
    pub const Q: usize = 0;
    pub const COND_S: usize = 1;
    pub const COND_A: usize = 2;
    pub const COND_B: usize = 3;
    pub const COND_TOTAL: usize = 4;
    pub const SUM_P2: usize = 5;
    pub const SUM_P3: usize = 6;
    // one-row sums
    pub const PAIR_FREQ: usize = 0;
    pub const P_ROW: usize = 1;
}

const EDGE_SUMS: &[&str] = &["q", "cond_s", "cond_a", "cond_b", "cond_total", "sum_p2", "sum_p3"];

fn layout(mode: Mode) -> Layout {
    match mode {
        Mode::Exact => Layout {
            indicators: &[
                "kappa_gt1",
                "kappa_eq2",
                "kappa_ge3",
                "heuristic_success",
                "row_average_ok",
                "sandwich_violations",
                "partition_violations",
                "any_edge",
                "i_s",
                "i_a",
                "i_b",
            ],
            sums: EDGE_SUMS,
            hist: true,
        },
        Mode::Edges => Layout {
            indicators: &["any_edge", "i_s", "i_a", "i_b", "partition_violations"],
            sums: EDGE_SUMS,
            hist: false,
        },
        Mode::OneRow => Layout {
            indicators: &["any_e", "any_f", "inclusion_violations", "pair_e"],
            sums: &["pair_frequency", "p_row"],
            hist: false,
        },
        Mode::Heuristic => Layout {
            indicators: &["heuristic_success", "kappa_gt1"],
            sums: &[],
            hist: true,
        },
    }
}

/// Histogram buckets 1..=HIST_CAP, larger supports go to the overflow count.
const HIST_CAP: usize = DEFAULT_K_MAX;

#[derive(Debug, Clone)]
struct Tally {
    counts: Vec<(u64, u64)>,
    sums: Vec<(f64, f64)>,
    hist: Vec<u64>,
    overflow: u64,
}

impl Tally {
    fn new(l: &Layout) -> Self {
        Self {
            counts: vec![(0, 0); l.indicators.len()],
            sums: vec![(0.0, 0.0); l.sums.len()],
            hist: vec![0; if l.hist { HIST_CAP + 1 } else { 0 }],
            overflow: 0,
        }
    }

    #[inline]
    fn hit(&mut self, i: usize, event: bool) {
        self.counts[i].0 += event as u64;
        self.counts[i].1 += 1;
    }

    #[inline]
    fn hits(&mut self, i: usize, events: u64, trials: u64) {
        self.counts[i].0 += events;
        self.counts[i].1 += trials;
    }

    #[inline]
    fn add(&mut self, i: usize, x: f64) {
        self.sums[i].0 += x;
        self.sums[i].1 += x * x;
    }

    fn kappa(&mut self, kappa: usize) {
        if kappa <= HIST_CAP {
            self.hist[kappa] += 1;
        } else {
            self.overflow += 1;
        }
    }

    fn absorb(&mut self, other: &Tally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (a, b) in self.hist.iter_mut().zip(&other.hist) {
            *a += b;
        }
        self.overflow += other.overflow;
    }
}

/// Per-worker state reused across samples.
struct Sampler {
    config: ExperimentConfig,
    edges: Option<EdgeWorkspace>,
}

impl Sampler {
    fn new(config: &ExperimentConfig) -> Result<Self, CensusError> {
        let edges = match config.mode {
            Mode::Edges | Mode::OneRow => Some(EdgeWorkspace::new(config.n)?),
            _ => None,
        };
        Ok(Self {
            config: config.clone(),
            edges,
        })
    }

    fn sample(&mut self, t: &mut Tally, index: u64) -> Result<(), CensusError> {
        let spec = SeedSpec::new(self.config.seed, index);
        match self.config.mode {
            Mode::Edges => {
                let r = self.edges.as_mut().expect("edge workspace").classify(spec);
                t.hit(ix::E_ANY, r.any_edge);
                t.hit(ix::E_S, r.i_s);
                t.hit(ix::E_A, r.i_a);
                t.hit(ix::E_B, r.i_b);
                let classes = r.i_s as u8 + r.i_a as u8 + r.i_b as u8;
                t.hit(ix::E_PARTITION_BAD, (classes == 1) != r.any_edge || classes > 1);
                add_conditional(t, &r);
            }
            Mode::OneRow => {
                let n = self.config.n;
                let k = self.config.k.expect("validated");
                let ev = self.edges.as_mut().expect("edge workspace").row_events(spec, k - 1)?;
                let pairs = (n - k) as u64;
                t.hit(ix::R_ANY_E, ev.any_e);
                t.hit(ix::R_ANY_F, ev.any_f);
                t.hits(ix::R_INCLUSION_BAD, ev.violations as u64, pairs);
                t.hits(ix::R_PAIR_E, ev.count_e as u64, pairs);
                t.add(ix::PAIR_FREQ, ev.count_e as f64 / pairs as f64);
                t.add(ix::P_ROW, ev.p_row);
            }
            Mode::Exact => {
                let q = sample_goe(self.config.n, spec)?;
                let e = solver::enumerate_supports(&q, None)?;
                let kappa = e.best.kappa;
                let h = solver::min_diag_heuristic(&q);
                t.kappa(kappa);
                t.hit(ix::KAPPA_GT1, kappa > 1);
                t.hit(ix::KAPPA_EQ2, kappa == 2);
                t.hit(ix::KAPPA_GE3, kappa >= 3);
                t.hit(ix::HEUR_OK, kappa == 1 && e.best.support[0] == h);
                if kappa > 1 {
                    t.hit(ix::ROW_AVG_OK, solver::row_average_ok(&q, &e.best.support)?);
                }
                let r = classify_edges(&order_instance(&q));
                t.hit(ix::ANY_EDGE, r.any_edge);
                t.hit(ix::I_S, r.i_s);
                t.hit(ix::I_A, r.i_a);
                t.hit(ix::I_B, r.i_b);
                t.hit(ix::SANDWICH_BAD, (kappa == 2 && !r.any_edge) || (r.any_edge && kappa == 1));
                let classes = r.i_s as u8 + r.i_a as u8 + r.i_b as u8;
                t.hit(ix::PARTITION_BAD, (classes == 1) != r.any_edge || classes > 1);
                add_conditional(t, &r);
            }
            Mode::Heuristic => {
                let q = sample_goe(self.config.n, spec)?;
                let best = solver::solve_enumerate(&q, None)?;
                let h = solver::min_diag_heuristic(&q);
                t.kappa(best.kappa);
                t.hit(ix::H_OK, best.kappa == 1 && best.support[0] == h);
                t.hit(ix::H_KAPPA_GT1, best.kappa > 1);
            }
        }
        Ok(())
    }
}

fn add_conditional(t: &mut Tally, r: &stqp_core::events::PairEventReport) {
    t.add(ix::Q, r.q);
    t.add(ix::COND_S, r.cond_s);
    t.add(ix::COND_A, r.cond_a);
    t.add(ix::COND_B, r.cond_b);
    t.add(ix::COND_TOTAL, r.cond_s + r.cond_a + r.cond_b);
    t.add(ix::SUM_P2, r.sum_p2);
    t.add(ix::SUM_P3, r.sum_p3);
}

fn run_blocks(config: &ExperimentConfig, blocks: std::ops::Range<u64>) -> Result<Vec<Tally>, CensusError> {
    let l = layout(config.mode);
    let mut sampler = Sampler::new(config)?;
    let end = config.first_index + config.samples;
    let mut out = Vec::with_capacity((blocks.end - blocks.start) as usize);
    for b in blocks {
        let mut t = Tally::new(&l);
        let lo = config.first_index + b * BLOCK;
        for index in lo..(lo + BLOCK).min(end) {
            sampler.sample(&mut t, index)?;
        }
        out.push(t);
    }
    Ok(out)
}

/// Runs the census on `config.workers` threads, each owning a contiguous range
/// of blocks.
pub fn run_census(config: &ExperimentConfig) -> Result<EstimateReport, CensusError> {
    config.validate()?;
    let start = Instant::now();
    let n_blocks = config.samples.div_ceil(BLOCK);
    let workers = (config.workers as u64).min(n_blocks).max(1);
    let per = n_blocks / workers;
    let extra = n_blocks % workers;
    let mut ranges = Vec::with_capacity(workers as usize);
    let mut lo = 0;
    for w in 0..workers {
        let len = per + u64::from(w < extra);
        ranges.push(lo..lo + len);
        lo += len;
    }
    let shards: Vec<Result<Vec<Tally>, CensusError>> = if workers == 1 {
        vec![run_blocks(config, 0..n_blocks)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = ranges
                .into_iter()
                .map(|r| s.spawn(move || run_blocks(config, r)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("census worker panicked"))
                .collect()
        })
    };
    let l = layout(config.mode);
    let mut total = Tally::new(&l);
    for shard in shards {
        for t in shard? {
            total.absorb(&t);
        }
    }
    let metadata = Metadata {
        n: config.n,
        samples: config.samples,
        seed: config.seed,
        mode: config.mode,
        k: config.k,
        workers: config.workers,
        ranges: vec![[config.first_index, config.first_index + config.samples]],
        runtime_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(build_report(&l, &total, metadata))
}

fn build_report(l: &Layout, t: &Tally, metadata: Metadata) -> EstimateReport {
    let indicators = l
        .indicators
        .iter()
        .zip(&t.counts)
        .map(|(name, &(c, n))| (name.to_string(), Proportion::new(c, n)))
        .collect();
    let rao_blackwell = l
        .sums
        .iter()
        .zip(&t.sums)
        .map(|(name, &(s, s2))| (name.to_string(), MeanStat::new(s, s2, metadata.samples)))
        .collect();
    let kappa_hist = t
        .hist
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(k, &c)| (k, c))
        .collect();
    EstimateReport {
        metadata,
        indicators,
        rao_blackwell,
        kappa_hist,
        kappa_overflow: t.overflow,
    }
}

fn coalesce(mut ranges: Vec<[u64; 2]>) -> Result<Vec<[u64; 2]>, CensusError> {
    ranges.sort_unstable();
    let mut out: Vec<[u64; 2]> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r[0] < last[1] => {
                return Err(CensusError::Merge(format!(
                    "sample ranges [{}, {}) and [{}, {}) overlap",
                    last[0], last[1], r[0], r[1]
                )))
            }
            Some(last) if r[0] == last[1] => last[1] = r[1],
            _ => out.push(r),
        }
    }
    Ok(out)
}

/// Pools reports of the same experiment run on disjoint sample ranges.
pub fn merge(reports: &[EstimateReport]) -> Result<EstimateReport, CensusError> {
    let first = reports
        .first()
        .ok_or_else(|| CensusError::Merge("nothing to merge".into()))?;
    let m0 = &first.metadata;
    for r in &reports[1..] {
        let m = &r.metadata;
        if (m.n, m.seed, m.mode, m.k) != (m0.n, m0.seed, m0.mode, m0.k) {
            return Err(CensusError::Merge(format!(
                "incompatible experiments: (n={}, seed={}, mode={}, k={:?}) vs (n={}, seed={}, mode={}, k={:?})",
                m0.n, m0.seed, m0.mode, m0.k, m.n, m.seed, m.mode, m.k
            )));
        }
    }
    let ranges = coalesce(reports.iter().flat_map(|r| r.metadata.ranges.iter().copied()).collect())?;
    let samples: u64 = reports.iter().map(|r| r.metadata.samples).sum();

    let mut indicators = BTreeMap::new();
    for (name, p) in &first.indicators {
        let (mut c, mut n) = (p.count, p.trials);
        for r in &reports[1..] {
            let q = r.indicator(name);
            c += q.count;
            n += q.trials;
        }
        indicators.insert(name.clone(), Proportion::new(c, n));
    }
    let mut rao_blackwell = BTreeMap::new();
    for (name, s) in &first.rao_blackwell {
        let (mut a, mut b) = (s.sum, s.sum_sq);
        for r in &reports[1..] {
            let t = r.stat(name);
            a += t.sum;
            b += t.sum_sq;
        }
        rao_blackwell.insert(name.clone(), MeanStat::new(a, b, samples));
    }
    let mut kappa_hist = first.kappa_hist.clone();
    for r in &reports[1..] {
        for (k, c) in &r.kappa_hist {
            *kappa_hist.entry(*k).or_insert(0) += c;
        }
    }
    Ok(EstimateReport {
        metadata: Metadata {
            samples,
            workers: reports.iter().map(|r| r.metadata.workers).max().unwrap_or(1),
            ranges,
            runtime_seconds: reports.iter().map(|r| r.metadata.runtime_seconds).sum(),
            ..m0.clone()
        },
        indicators,
        rao_blackwell,
        kappa_hist,
        kappa_overflow: reports.iter().map(|r| r.kappa_overflow).sum(),
    })
}
