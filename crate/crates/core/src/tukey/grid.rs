use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on the number of cells whose depth is materialized.
pub const DEFAULT_CELL_CAP: u64 = 10_000_000;

/// Axis-aligned grid over `[-R, R]^d` with spacing `α′`.
///
/// Each axis has `N = ⌈2R/α′⌉` cells with centers `-R + (i + ½)α′`. Cell
/// indices are row-major with the first coordinate most significant, so
/// index order matches lexicographic order of centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    radius: f64,
    alpha_prime: f64,
    dim: usize,
    per_axis: u64,
}

impl GridSpec {
    pub fn new(radius: f64, alpha_prime: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid radius {radius}")));
        }
        if !(alpha_prime > 0.0 && alpha_prime.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid resolution {alpha_prime}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("grid dimension 0".into()));
        }
        let per_axis = (2.0 * radius / alpha_prime).ceil().max(1.0);
        if per_axis > (1u64 << 52) as f64 {
            return Err(Error::GridTooLarge {
                cells: per_axis as u128,
                cap: DEFAULT_CELL_CAP,
            });
        }
        Ok(GridSpec {
            radius,
            alpha_prime,
            dim,
            per_axis: per_axis as u64,
        })
    }

    /// Grid with exactly `cells` cells per axis of width `alpha_prime`,
    /// centered at the origin.
    pub fn with_cells(cells: u64, alpha_prime: f64, dim: usize) -> Result<Self> {
        let g = GridSpec::new(cells as f64 * alpha_prime / 2.0, alpha_prime, dim)?;
        debug_assert_eq!(g.per_axis, cells);
        Ok(g)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> u64 {
        self.per_axis
    }

    /// Total number of cells, as a float since it may exceed `u64`.
    pub fn total_cells(&self) -> f64 {
        (self.per_axis as f64).powi(self.dim as i32)
    }

    pub fn axis_center(&self, i: u64) -> f64 {
        -self.radius + (i as f64 + 0.5) * self.alpha_prime
    }

    /// Nearest center index along one axis; ties go to the lower center and
    /// values outside the grid clamp to the end cells.
    pub fn axis_index(&self, v: f64) -> u64 {
        let s = (v + self.radius) / self.alpha_prime - 0.5;
        let i = (s - 0.5).ceil();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as u64).min(self.per_axis - 1)
        }
    }

    /// L1-nearest grid point. The L1 distance separates over coordinates,
    /// so this is the coordinate-wise nearest center.
    pub fn snap(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .map(|&v| self.axis_center(self.axis_index(v)))
            .collect()
    }

    pub fn axis_indices(&self, point: &[f64]) -> Vec<u64> {
        point.iter().map(|&v| self.axis_index(v)).collect()
    }

    pub fn center_of(&self, indices: &[u64]) -> Vec<f64> {
        indices.iter().map(|&i| self.axis_center(i)).collect()
    }
}
