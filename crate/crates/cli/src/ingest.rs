//! Delimited-text ingestion: one point per row, numeric columns, optional
//! header, optional per-column min-max normalization.

use spherical_cluster::{Dataset64, ModelError};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("no data rows in input")]
    EmptyFile,
    #[error("row {line} has {got} columns, expected {expected}")]
    RaggedRows {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("row {line}, column {col}: cannot parse {token:?} as a number")]
    Parse {
        line: usize,
        col: usize,
        token: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IngestError {
    pub fn category(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io",
            IngestError::EmptyFile | IngestError::RaggedRows { .. } | IngestError::Parse { .. } => {
                "parse"
            }
            IngestError::Model(_) => "model",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Normalize {
    None,
    Minmax,
}

pub fn ingest(
    path: &Path,
    delimiter: char,
    has_header: bool,
    normalize: Normalize,
) -> Result<Dataset64, IngestError> {
    let raw = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rows(&raw, delimiter, has_header, normalize)
}

pub fn parse_rows(
    raw: &str,
    delimiter: char,
    has_header: bool,
    normalize: Normalize,
) -> Result<Dataset64, IngestError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut expected = 0usize;
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if has_header && rows.is_empty() && lineno == first_content_line(raw) {
            continue;
        }
        let mut row = Vec::new();
        for (col, token) in line.split(delimiter).enumerate() {
            let token = token.trim();
            let value: f64 = token.parse().map_err(|_| IngestError::Parse {
                line: lineno + 1,
                col: col + 1,
                token: token.to_string(),
            })?;
            row.push(value);
        }
        if expected == 0 {
            expected = row.len();
        } else if row.len() != expected {
            return Err(IngestError::RaggedRows {
                line: lineno + 1,
                got: row.len(),
                expected,
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    if normalize == Normalize::Minmax {
        min_max_normalize(&mut rows);
    }
    Ok(Dataset64::new(rows)?)
}

fn first_content_line(raw: &str) -> usize {
    raw.lines()
        .position(|l| !l.trim().is_empty())
        .unwrap_or(0)
}

/// Map each coordinate to (x - min) / (max - min); constant columns go to 0.
fn min_max_normalize(rows: &mut [Vec<f64>]) {
    let d = rows[0].len();
    for j in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in rows.iter() {
            lo = lo.min(r[j]);
            hi = hi.max(r[j]);
        }
        let span = hi - lo;
        for r in rows.iter_mut() {
            r[j] = if span > 0.0 { (r[j] - lo) / span } else { 0.0 };
        }
    }
}

/// Write a dataset back out in the same row-per-point format.
#[cfg_attr(not(test), allow(dead_code))]
pub fn write_dataset(dataset: &Dataset64, delimiter: char) -> String {
    let mut out = String::new();
    for p in dataset.points() {
        let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(&delimiter.to_string()));
        out.push('\n');
    }
    out
}
