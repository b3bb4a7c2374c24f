//! Ordered collections of real vectors and their plain-text file format.
//!
//! The text format is one sample per line with whitespace-separated
//! coordinates, preceded by a header line `# dim=<d> n=<n>`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of `n` vectors in `R^d`, stored row-major.
///
/// Order matters: the paired covariance estimator pairs row `i` with row
/// `i + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadShape("dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::BadShape(format!(
                "{} values do not split into rows of length {dim}",
                data.len()
            )));
        }
        Ok(Dataset { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::BadShape("no rows".into()))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::BadShape(format!(
                    "row {i} has length {}, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Dataset::new(dim, data)
    }

    /// One-dimensional dataset from scalar values.
    pub fn from_scalars(values: &[f64]) -> Self {
        Dataset {
            dim: 1,
            data: values.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn set_row(&mut self, i: usize, value: &[f64]) {
        self.row_mut(i).copy_from_slice(value);
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Values of coordinate `j` across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows `start..end` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }

    /// Reorders rows so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Dataset {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Dataset {
            dim: self.dim,
            data,
        }
    }

    /// Number of positions at which the two datasets differ.
    pub fn hamming_distance(&self, other: &Dataset) -> Option<usize> {
        if self.dim != other.dim || self.len() != other.len() {
            return None;
        }
        Some(
            self.rows()
                .zip(other.rows())
                .filter(|(a, b)| a != b)
                .count(),
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# dim={} n={}\n", self.dim, self.len());
        for row in self.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                // `{:?}` prints the shortest representation that round-trips.
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (dim, n) = loop {
            let (idx, line) = lines.next().ok_or(Error::Parse {
                line: 1,
                message: "missing header `# dim=<d> n=<n>`".into(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            break parse_header(line).ok_or(Error::Parse {
                line: idx + 1,
                message: format!("expected header `# dim=<d> n=<n>`, found `{line}`"),
            })?;
        };
        if dim == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "dim must be positive".into(),
            });
        }
        let mut data = Vec::with_capacity(dim * n);
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("`{tok}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: "non-finite coordinate".into(),
                    });
                }
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {dim} coordinates, found {}", data.len() - before),
                });
            }
        }
        if data.len() != dim * n {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "header declares n={n} but file has {} samples",
                    data.len() / dim
                ),
            });
        }
        Dataset::new(dim, data)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Dataset::parse_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?;
    let mut dim = None;
    let mut n = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("dim=") {
            dim = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse().ok();
        }
    }
    Some((dim?, n?))
}
