//! Tables comparing finite-n quadrature, leading-order asymptotics and,
//! optionally, edge-census estimates.

use std::str::FromStr;

use serde_json::{json, Map, Value};
use stqp_core::quad::{QuadResult, QuadSpec};
use stqp_core::terms::{self, AsymptoticTerm};

use crate::census::{self, ExperimentConfig, MeanStat, Mode};

pub const CSV_HEADER: &str = "n,s_quad,a_quad,b_quad,s_asym,a_asym,b_asym,ratio_s,ratio_a,ratio_b";
const MC_HEADER: &str = "mc_samples,mc_s,mc_s_se,mc_a,mc_a_se,mc_b,mc_b_se";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("table has no rows")]
    Empty,
    #[error("n = {n}: {source}")]
    Term {
        n: u64,
        #[source]
        source: stqp_core::Error,
    },
    #[error(transparent)]
    Census(#[from] census::CensusError),
}

/// Which quantity fills the A column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AVariant {
    /// The exact class probability.
    Exact,
    /// Its linear intensity (n−2) E G(U_(1), U_(2)).
    Linear,
}

impl FromStr for AVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" | "a-exact" => Ok(AVariant::Exact),
            "linear" | "i" => Ok(AVariant::Linear),
            _ => Err(format!("unknown A variant '{s}' (expected exact or linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermSet {
    pub s: bool,
    pub a: bool,
    pub b: bool,
}

impl TermSet {
    pub const ALL: TermSet = TermSet { s: true, a: true, b: true };
}

impl FromStr for TermSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut t = TermSet { s: false, a: false, b: false };
        for part in s.split(',').map(str::trim) {
            match part {
                "all" => t = TermSet::ALL,
                "s" => t.s = true,
                "a" => t.a = true,
                "b" => t.b = true,
                _ => return Err(format!("unknown term '{part}' (expected s, a, b or all)")),
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

/// Edge-census means placed next to the quadrature values.
#[derive(Debug, Clone, PartialEq)]
pub struct McColumns {
    pub samples: u64,
    pub cond_s: MeanStat,
    pub cond_a: MeanStat,
    pub cond_b: MeanStat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub n: u64,
    pub s_quad: Option<QuadResult>,
    pub a_quad: Option<QuadResult>,
    pub b_quad: Option<QuadResult>,
    pub a_variant: AVariant,
    pub mc: Option<McColumns>,
}

fn ratio(q: &Option<QuadResult>, asym: f64) -> Option<f64> {
    q.as_ref().map(|q| q.value / asym)
}

impl ComparisonRow {
    pub fn s_asym(&self) -> f64 {
        asym(AsymptoticTerm::S, self.n)
    }
    pub fn a_asym(&self) -> f64 {
        asym(AsymptoticTerm::A, self.n)
    }
    pub fn b_asym(&self) -> f64 {
        asym(AsymptoticTerm::B, self.n)
    }
    pub fn ratio_s(&self) -> Option<f64> {
        ratio(&self.s_quad, self.s_asym())
    }
    pub fn ratio_a(&self) -> Option<f64> {
        ratio(&self.a_quad, self.a_asym())
    }
    pub fn ratio_b(&self) -> Option<f64> {
        ratio(&self.b_quad, self.b_asym())
    }

    /// False if any computed column failed to meet its tolerance.
    pub fn converged(&self) -> bool {
        [&self.s_quad, &self.a_quad, &self.b_quad]
            .iter()
            .all(|q| q.as_ref().is_none_or(|q| q.converged))
    }

    fn fields(&self) -> [(&'static str, Option<f64>); 9] {
        let v = |q: &Option<QuadResult>| q.as_ref().map(|q| q.value);
        [
            ("s_quad", v(&self.s_quad)),
            ("a_quad", v(&self.a_quad)),
            ("b_quad", v(&self.b_quad)),
            ("s_asym", Some(self.s_asym())),
            ("a_asym", Some(self.a_asym())),
            ("b_asym", Some(self.b_asym())),
            ("ratio_s", self.ratio_s()),
            ("ratio_a", self.ratio_a()),
            ("ratio_b", self.ratio_b()),
        ]
    }
}

fn asym(term: AsymptoticTerm, n: u64) -> f64 {
    terms::asymptote(term, n as f64, None).expect("rows have n >= 2")
}

/// Quadrature specs used for table rows.
#[derive(Debug, Clone, Copy)]
pub struct RowSpecs {
    pub one_dim: QuadSpec,
    pub nested: QuadSpec,
}

impl Default for RowSpecs {
    fn default() -> Self {
        Self {
            one_dim: QuadSpec::ONE_DIM,
            nested: QuadSpec::NESTED,
        }
    }
}

pub fn compute_row(n: u64, set: TermSet, variant: AVariant, specs: &RowSpecs) -> Result<ComparisonRow, ReportError> {
    let wrap = |source| ReportError::Term { n, source };
    if n < 4 {
        return Err(wrap(stqp_core::Error::Invalid("table rows need n >= 4")));
    }
    let s_quad = set.s.then(|| terms::s_term(n, &specs.one_dim)).transpose().map_err(wrap)?;
    let a_quad = set
        .a
        .then(|| match variant {
            AVariant::Exact => terms::a_term_exact(n, &specs.nested),
            AVariant::Linear => terms::i_term(n, &specs.nested),
        })
        .transpose()
        .map_err(wrap)?;
    let b_quad = set.b.then(|| terms::s3_term(n, &specs.nested)).transpose().map_err(wrap)?;
    Ok(ComparisonRow {
        n,
        s_quad,
        a_quad,
        b_quad,
        a_variant: variant,
        mc: None,
    })
}

/// Adds edge-census columns to `row`.
pub fn attach_census(row: &mut ComparisonRow, samples: u64, seed: u64, workers: usize) -> Result<(), ReportError> {
    let n = usize::try_from(row.n).map_err(|_| census::CensusError::Config("n too large".into()))?;
    let cfg = ExperimentConfig::new(Mode::Edges, n, samples, seed).with_workers(workers);
    let r = census::run_census(&cfg)?;
    row.mc = Some(McColumns {
        samples,
        cond_s: *r.stat("cond_s"),
        cond_a: *r.stat("cond_a"),
        cond_b: *r.stat("cond_b"),
    });
    Ok(())
}

fn sig12(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.11e}")).unwrap_or_default()
}

pub fn emit_table(rows: &[ComparisonRow], format: TableFormat) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let with_mc = rows.iter().any(|r| r.mc.is_some());
    match format {
        TableFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            if with_mc {
                out.push(',');
                out.push_str(MC_HEADER);
            }
            out.push('\n');
            for r in rows {
                out.push_str(&r.n.to_string());
                for (_, v) in r.fields() {
                    out.push(',');
                    out.push_str(&sig12(v));
                }
                if with_mc {
                    match &r.mc {
                        Some(m) => {
                            out.push_str(&format!(",{}", m.samples));
                            for s in [&m.cond_s, &m.cond_a, &m.cond_b] {
                                out.push_str(&format!(",{},{}", sig12(Some(s.mean)), sig12(Some(s.std_error))));
                            }
                        }
                        None => out.push_str(",,,,,,,"),
                    }
                }
                out.push('\n');
            }
            Ok(out)
        }
        TableFormat::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut obj = Map::new();
                    obj.insert("n".into(), json!(r.n));
                    for (k, v) in r.fields() {
                        obj.insert(k.into(), v.map_or(Value::Null, |v| json!(v)));
                    }
                    if let Some(m) = &r.mc {
                        obj.insert("mc_samples".into(), json!(m.samples));
                        for (k, s) in [("mc_s", &m.cond_s), ("mc_a", &m.cond_a), ("mc_b", &m.cond_b)] {
                            obj.insert(k.into(), json!(s.mean));
                            obj.insert(format!("{k}_se"), json!(s.std_error));
                        }
                    }
                    Value::Object(obj)
                })
                .collect();
            Ok(serde_json::to_string_pretty(&arr).expect("finite numbers") + "\n")
        }
    }
}
