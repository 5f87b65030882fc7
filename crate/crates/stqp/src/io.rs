//! Matrix files and solver output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stqp_core::goe::GoeMatrix;
use stqp_core::solver::SolveResult;

/// Halves of an off-diagonal pair may differ by this much; they are averaged.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    Matrix {
        path: PathBuf,
        #[source]
        source: stqp_core::Error,
    },
}

/// Parses a square symmetric matrix, one row per line, comma separated.
/// Blank lines and lines starting with '#' are skipped.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<GoeMatrix, IoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>().map_err(|_| IoError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("not a number: '{f}'"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "no matrix rows".into(),
        });
    }
    GoeMatrix::from_rows(&rows, SYMMETRY_TOL).map_err(|source| IoError::Matrix {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix_csv(path: &Path) -> Result<GoeMatrix, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_csv(&text, path)
}

/// Shortest round-tripping decimal form of every entry.
pub fn matrix_to_csv(q: &GoeMatrix) -> String {
    let mut out = String::new();
    for row in q.to_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// JSON form of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub kappa: usize,
    pub value: f64,
    pub support: Vec<usize>,
    pub x: Vec<f64>,
}

impl From<&SolveResult> for SolveReport {
    fn from(r: &SolveResult) -> Self {
        Self {
            n: r.x.len(),
            kappa: r.kappa,
            value: r.value,
            support: r.support.clone(),
            x: r.x.clone(),
        }
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), IoError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| IoError::File {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                .map_err(|source| IoError::File {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
