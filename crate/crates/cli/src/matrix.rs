//! Plain-text complex matrices.
//!
//! One matrix row per line; entries separated by whitespace or commas.
//! Each entry is a real number, a pure imaginary (`0.5i`, `-i`) or a
//! complex number written `a+bi` / `a-bi`. Blank lines and anything after
//! `#` are ignored.
//!
//! ```text
//! # |+><+|
//! 0.5   0.5
//! 0.5   0.5
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use qsteer::{Complex64, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("line {line}: cannot parse `{token}` as a complex number")]
    BadEntry { line: usize, token: String },
    #[error("line {line}: expected {expected} entries, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("no matrix entries found")]
    Empty,
    #[error("matrix has {0} rows, more than the supported maximum")]
    TooLarge(usize),
}

/// Largest side length accepted by [`parse_matrix`].
pub const MAX_SIDE: usize = 4096;

pub fn parse_complex(token: &str) -> Option<Complex64> {
    let t = token.trim();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return finite(t.parse::<f64>().ok()?).map(Complex64::from);
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re.is_empty() {
        0.0
    } else {
        finite(re.parse::<f64>().ok()?)?
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => finite(s.parse::<f64>().ok()?)?,
    };
    Some(Complex64::new(re, im))
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<Complex64>, MatrixError> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut width = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        if rows.len() >= MAX_SIDE {
            return Err(MatrixError::TooLarge(rows.len() + 1));
        }
        let expected = *width.get_or_insert(tokens.len());
        if tokens.len() != expected {
            return Err(MatrixError::RaggedRow {
                line: n + 1,
                expected,
                found: tokens.len(),
            });
        }
        let row = tokens
            .iter()
            .map(|t| {
                parse_complex(t).ok_or_else(|| MatrixError::BadEntry {
                    line: n + 1,
                    token: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let cols = width.ok_or(MatrixError::Empty)?;
    if rows.len() != cols {
        return Err(MatrixError::NotSquare {
            rows: rows.len(),
            cols,
        });
    }
    Ok(DMatrix::from_fn(cols, cols, |i, j| rows[i][j]))
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: MatrixError },
    #[error("{path}: {source}")]
    Invalid { path: String, source: qsteer::Error },
}

/// Reads a density matrix from a text file and checks its invariants.
pub fn load_density(path: &Path) -> Result<DensityMatrix, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: shown.clone(),
        source,
    })?;
    let m = parse_matrix(&text).map_err(|source| LoadError::Parse {
        path: shown.clone(),
        source,
    })?;
    DensityMatrix::new(m).map_err(|source| LoadError::Invalid {
        path: shown,
        source,
    })
}
