//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a quadrature missed its
//! tolerance, 3 a property check failed.
//!
//! `--config FILE` reads `key = value` lines. Each key names a long flag of
//! the chosen subcommand and fills it in unless the flag is given on the
//! command line, so flags win over the file, and the file wins over
//! `STQP_WORKERS`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;
use stqp_core::goe::{sample_goe, SeedSpec};
use stqp_core::quad::{QuadResult, QuadSpec};
use stqp_core::{solver, terms};

use crate::census::{self, ExperimentConfig, Mode};
use crate::checks::{self, Suite};
use crate::io::{self, SolveReport};
use crate::report::{self, AVariant, RowSpecs, TableFormat, TermSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stqp", version, about = "Random standard quadratic programs over the simplex")]
pub struct Cli {
    /// key = value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance exactly and print the optimiser as JSON.
    Solve(SolveArgs),
    /// Run a seeded Monte Carlo census.
    Census(CensusArgs),
    /// Pool census reports over disjoint sample ranges.
    Merge(MergeArgs),
    /// Evaluate one quantity by quadrature.
    Quad(QuadArgs),
    /// Compare quadrature, asymptotics and optional Monte Carlo over an n grid.
    Table(TableArgs),
    /// Run the built-in property suites.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample index within the seed's streams.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
    /// CSV file with a symmetric matrix, one row per line.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Largest support size to enumerate.
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub mode: Mode,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "STQP_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// One-based row index for one-row mode.
    #[arg(long)]
    pub k: Option<usize>,
    /// Index of the first sample, for sharded runs.
    #[arg(long, default_value_t = 0)]
    pub first_index: u64,
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// JSON reports written by `census`.
    #[arg(required = true, value_name = "REPORT")]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum QuadTerm {
    S,
    AExact,
    I,
    S3,
    Pnk,
    Nvm,
    Betalog,
    Qn,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(long)]
    pub term: QuadTerm,
    #[arg(long)]
    pub n: u64,
    /// One-based order index (pnk).
    #[arg(long)]
    pub k: Option<u64>,
    /// Scale of the normal variable (nvm).
    #[arg(long)]
    pub a: Option<f64>,
    /// Power of the uniform (betalog).
    #[arg(long)]
    pub r: Option<f64>,
    /// Power of the logarithm (betalog).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Moment order (qn).
    #[arg(long)]
    pub power: Option<u32>,
    /// Relative tolerance; defaults depend on the term.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
    pub n_grid: Vec<u64>,
    #[arg(long, default_value = "all")]
    pub terms: TermSet,
    #[arg(long, default_value = "csv")]
    pub format: TableFormat,
    /// Add edge-census columns with this many samples per row.
    #[arg(long, value_name = "SAMPLES")]
    pub with_mc: Option<u64>,
    #[arg(long, default_value = "exact")]
    pub a_variant: AVariant,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "STQP_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Relative tolerance of the one-dimensional integrals; nested ones use
    /// a thousand times this value, as with the defaults.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value = "all")]
    pub suite: Suite,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    NotConverged(String),
    ChecksFailed(usize),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::NotConverged(_) => EXIT_NONCONVERGED,
            Failure::ChecksFailed(_) => EXIT_CHECK_FAILED,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Output goes to stdout or `--out`, diagnostics to stderr.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::NotConverged(m) => eprintln!("error: {m}"),
                Failure::ChecksFailed(k) => eprintln!("error: {k} check(s) failed"),
            }
            f.exit_code()
        }
    }
}

/// Parses a `key = value` config text. `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Appends `--key value` for every config entry the command line leaves unset.
fn apply_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let entries = parse_config(&text).map_err(|e| format!("{path}: {e}"))?;

    let root = Cli::command();
    let sub = strs
        .iter()
        .skip(1)
        .find_map(|a| root.find_subcommand(a))
        .ok_or_else(|| "a config file needs a subcommand".to_string())?;
    for (key, value) in entries {
        let known = sub
            .get_arguments()
            .any(|arg| arg.get_long() == Some(key.as_str()) && key != "config");
        if !known {
            return Err(format!("{path}: '{key}' is not a flag of '{}'", sub.get_name()));
        }
        let flag = format!("--{key}");
        let eq = format!("{flag}=");
        if strs.iter().any(|a| *a == flag || a.starts_with(&eq)) {
            continue;
        }
        argv.push(eq.into());
        argv.last_mut().unwrap().push(value);
    }
    Ok(argv)
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Census(a) => census_cmd(a),
        Command::Merge(a) => merge_cmd(a),
        Command::Quad(a) => quad(a),
        Command::Table(a) => table(a),
        Command::Check(a) => check(a),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    io::emit(text, out).map_err(usage)
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let q = match (&a.matrix, a.n) {
        (Some(path), _) => io::read_matrix_csv(path).map_err(usage)?,
        (None, Some(n)) => sample_goe(n, SeedSpec::new(a.seed, a.index)).map_err(usage)?,
        (None, None) => return Err(usage("give --n or --matrix")),
    };
    let r = solver::solve_enumerate(&q, a.k_max).map_err(usage)?;
    let text = serde_json::to_string_pretty(&SolveReport::from(&r)).expect("finite solution");
    emit(&text, a.out.as_deref())
}

fn render(r: &census::EstimateReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => r.to_json(),
        ReportFormat::Csv => r.to_csv(),
    }
}

fn census_cmd(a: CensusArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::new(a.mode, a.n, a.samples, a.seed)
        .with_workers(a.workers)
        .with_first_index(a.first_index);
    cfg.k = a.k;
    eprintln!(
        "census: mode {} n {} samples {} seed {} workers {}",
        cfg.mode, cfg.n, cfg.samples, cfg.seed, cfg.workers
    );
    let r = census::run_census(&cfg).map_err(usage)?;
    eprintln!("census: done in {:.2} s", r.metadata.runtime_seconds);
    emit(&render(&r, a.format), a.out.as_deref())
}

fn merge_cmd(a: MergeArgs) -> Result<(), Failure> {
    let mut reports = Vec::with_capacity(a.reports.len());
    for p in &a.reports {
        let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        let r: census::EstimateReport =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        reports.push(r);
    }
    let merged = census::merge(&reports).map_err(usage)?;
    emit(&render(&merged, a.format), a.out.as_deref())
}

fn need<T>(v: Option<T>, flag: &str, term: &str) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("--term {term} needs --{flag}")))
}

fn quad(a: QuadArgs) -> Result<(), Failure> {
    let nested = matches!(a.term, QuadTerm::AExact | QuadTerm::I | QuadTerm::S3);
    let base = if nested { QuadSpec::NESTED } else { QuadSpec::ONE_DIM };
    let spec = match a.rel_tol {
        Some(t) => QuadSpec::new(t, base.abs_tol, base.max_subdivisions).map_err(usage)?,
        None => base,
    };
    let n = a.n;
    let (name, r): (&str, stqp_core::Result<QuadResult>) = match a.term {
        QuadTerm::S => ("s", terms::s_term(n, &spec)),
        QuadTerm::AExact => ("a-exact", terms::a_term_exact(n, &spec)),
        QuadTerm::I => ("i", terms::i_term(n, &spec)),
        QuadTerm::S3 => ("s3", terms::s3_term(n, &spec)),
        QuadTerm::Pnk => ("pnk", terms::p_nk(n, need(a.k, "k", "pnk")?, &spec)),
        QuadTerm::Nvm => ("nvm", terms::normal_vs_min(n, need(a.a, "a", "nvm")?, &spec)),
        QuadTerm::Betalog => (
            "betalog",
            terms::beta_log(n, need(a.r, "r", "betalog")?, a.gamma.unwrap_or(0.0), &spec),
        ),
        QuadTerm::Qn => ("qn", terms::qn_moment(n, need(a.power, "power", "qn")?, &spec)),
    };
    let r = r.map_err(usage)?;
    let mut obj = json!({
        "term": name,
        "n": n,
        "value": r.value,
        "err_est": r.err_est,
        "evals": r.evals,
        "converged": r.converged,
    });
    for (key, v) in [("k", a.k.map(|k| json!(k))), ("a", a.a.map(|v| json!(v))), ("r", a.r.map(|v| json!(v))),
        ("gamma", a.gamma.map(|v| json!(v))), ("power", a.power.map(|v| json!(v)))]
    {
        if let Some(v) = v {
            obj[key] = v;
        }
    }
    emit(&serde_json::to_string_pretty(&obj).expect("finite"), a.out.as_deref())?;
    if r.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "{name} at n = {n} missed its tolerance (err_est {:e})",
            r.err_est
        )))
    }
}

fn table(a: TableArgs) -> Result<(), Failure> {
    let mut specs = RowSpecs::default();
    if let Some(t) = a.rel_tol {
        specs.one_dim = QuadSpec::new(t, specs.one_dim.abs_tol, specs.one_dim.max_subdivisions).map_err(usage)?;
        specs.nested = QuadSpec::new(1e3 * t, specs.nested.abs_tol, specs.nested.max_subdivisions).map_err(usage)?;
    }
    let mut rows = Vec::with_capacity(a.n_grid.len());
    for &n in &a.n_grid {
        eprintln!("table: n = {n}");
        let mut row = report::compute_row(n, a.terms, a.a_variant, &specs).map_err(usage)?;
        if let Some(samples) = a.with_mc {
            report::attach_census(&mut row, samples, a.seed, a.workers).map_err(usage)?;
        }
        rows.push(row);
    }
    let text = report::emit_table(&rows, a.format).map_err(usage)?;
    emit(&text, a.out.as_deref())?;
    let bad: Vec<String> = rows.iter().filter(|r| !r.converged()).map(|r| r.n.to_string()).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!("quadrature missed its tolerance at n = {}", bad.join(", "))))
    }
}

fn check(a: CheckArgs) -> Result<(), Failure> {
    let outcomes = checks::run(a.suite);
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{} {:<11} {:<32} {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.suite,
            o.name,
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::ChecksFailed(failed))
    }
}
