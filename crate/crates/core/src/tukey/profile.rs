use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::tukey::depth::{depth_count_2d, SortedLine};
use crate::tukey::grid::{GridSpec, DEFAULT_CELL_CAP};

/// Integer depths `q(x; y) = n·T_x(y)` at grid cell centers.
///
/// Only cells inside the data's bounding box are stored. Every other center
/// is separated from the data by a coordinate hyperplane and has depth zero.
///
/// A profile may carry a depth floor. Depths below the floor are recorded as
/// zero, and level sets below it are overestimated by the whole bounding box.
#[derive(Debug, Clone)]
pub struct DepthProfile {
    grid: GridSpec,
    n: usize,
    floor: u32,
    lo: Vec<u64>,
    extent: Vec<u64>,
    depths: Vec<u32>,
    // at_least[s] = number of stored cells with depth ≥ s, for s in 0..=n+1.
    at_least: Vec<u64>,
}

impl DepthProfile {
    pub fn compute(x: &Dataset, grid: &GridSpec) -> Result<Self> {
        DepthProfile::compute_with_cap(x, grid, DEFAULT_CELL_CAP)
    }

    pub fn compute_with_cap(x: &Dataset, grid: &GridSpec, cap: u64) -> Result<Self> {
        DepthProfile::compute_floored(x, grid, cap, 0)
    }

    /// Profile that is exact only at depths `≥ floor`.
    ///
    /// Planar cells whose depth is provably below the floor, by a halfplane
    /// count along one of a few fixed directions, skip the exact sweep.
    pub fn compute_floored(x: &Dataset, grid: &GridSpec, cap: u64, floor: u32) -> Result<Self> {
        let d = grid.dim();
        if x.dim() != d {
            return Err(Error::BadShape(format!(
                "data dimension {} against grid dimension {d}",
                x.dim()
            )));
        }
        if d > 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter(
                "depth profile of empty data".into(),
            ));
        }
        let mut lo = Vec::with_capacity(d);
        let mut extent = Vec::with_capacity(d);
        let mut cells: u128 = 1;
        for j in 0..d {
            let col = x.column(j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let a = grid.axis_index(min);
            let b = grid.axis_index(max);
            lo.push(a);
            extent.push(b - a + 1);
            cells *= (b - a + 1) as u128;
        }
        if cells > cap as u128 {
            return Err(Error::GridTooLarge { cells, cap });
        }
        let cut = |q: usize| if (q as u32) < floor { 0 } else { q as u32 };
        let depths: Vec<u32> = if d == 1 {
            let line = SortedLine::new(x.as_slice());
            (0..extent[0])
                .map(|i| cut(line.depth_count(grid.axis_center(lo[0] + i))))
                .collect()
        } else {
            let pts: Vec<[f64; 2]> = x.rows().map(|r| [r[0], r[1]]).collect();
            let screen = (floor > 0).then(|| HalfplaneScreen::new(&pts));
            let mut out = Vec::with_capacity(cells as usize);
            for i in 0..extent[0] {
                let c0 = grid.axis_center(lo[0] + i);
                for k in 0..extent[1] {
                    let c1 = grid.axis_center(lo[1] + k);
                    let below = screen
                        .as_ref()
                        .is_some_and(|s| s.upper_bound([c0, c1]) < floor as usize);
                    out.push(if below {
                        0
                    } else {
                        cut(depth_count_2d(pts.iter().copied(), [c0, c1]))
                    });
                }
            }
            out
        };
        Ok(DepthProfile::assemble(
            *grid,
            x.len(),
            floor,
            lo,
            extent,
            depths,
        ))
    }

    /// Profile from explicit depths over the whole grid.
    pub fn from_depths(grid: GridSpec, n: usize, depths: Vec<u32>) -> Result<Self> {
        let total = grid.total_cells();
        if depths.len() as f64 != total {
            return Err(Error::BadShape(format!(
                "{} depths for {total} cells",
                depths.len()
            )));
        }
        if depths.iter().any(|&q| q as usize > n) {
            return Err(Error::InvalidParameter("depth exceeds n".into()));
        }
        let d = grid.dim();
        Ok(DepthProfile::assemble(
            grid,
            n,
            0,
            vec![0; d],
            vec![grid.per_axis(); d],
            depths,
        ))
    }

    fn assemble(
        grid: GridSpec,
        n: usize,
        floor: u32,
        lo: Vec<u64>,
        extent: Vec<u64>,
        depths: Vec<u32>,
    ) -> Self {
        let mut exact = vec![0u64; n + 2];
        for &q in &depths {
            exact[q as usize] += 1;
        }
        let mut at_least = vec![0u64; n + 2];
        let mut acc = 0;
        for s in (0..=n + 1).rev() {
            acc += exact[s];
            at_least[s] = acc;
        }
        DepthProfile {
            grid,
            n,
            floor,
            lo,
            extent,
            depths,
            at_least,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Depths below this value are not resolved.
    pub fn floor(&self) -> u32 {
        self.floor
    }

    /// Number of materialized cells.
    pub fn stored_cells(&self) -> usize {
        self.depths.len()
    }

    pub fn stored_depths(&self) -> &[u32] {
        &self.depths
    }

    /// Center of the `i`-th materialized cell.
    pub fn stored_center(&self, i: usize) -> Vec<f64> {
        let d = self.grid.dim();
        let mut idx = vec![0u64; d];
        let mut rem = i as u64;
        for j in (0..d).rev() {
            idx[j] = self.lo[j] + rem % self.extent[j];
            rem /= self.extent[j];
        }
        self.grid.center_of(&idx)
    }

    /// Depth at the cell containing `point` (after snapping).
    pub fn depth_at(&self, point: &[f64]) -> u32 {
        let idx = self.grid.axis_indices(point);
        let mut flat = 0u64;
        for j in 0..self.grid.dim() {
            if idx[j] < self.lo[j] || idx[j] >= self.lo[j] + self.extent[j] {
                return 0;
            }
            flat = flat * self.extent[j] + (idx[j] - self.lo[j]);
        }
        self.depths[flat as usize]
    }

    pub fn max_depth(&self) -> u32 {
        self.depths.iter().copied().max().unwrap_or(0)
    }

    /// Number of cells with exactly depth `s`, for `s ≥ max(1, floor)`.
    pub fn count_exactly(&self, s: usize) -> u64 {
        if s == 0 || s > self.n || s < self.floor as usize {
            return 0;
        }
        self.at_least[s] - self.at_least[s + 1]
    }

    /// Number of grid cells in `Y_level = {y : q(x; y) ≥ level}`.
    ///
    /// Levels at or below zero cover the whole grid; levels above `n` are
    /// empty. Levels below the floor count the whole bounding box, an upper
    /// bound.
    pub fn count_at_least(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return self.grid.total_cells();
        }
        let s = level.ceil();
        if s > self.n as f64 {
            return 0.0;
        }
        if s < self.floor as f64 {
            return self.depths.len() as f64;
        }
        self.at_least[s as usize] as f64
    }

    /// `Vol(Y_level)` approximated by cell count times `α′^d`.
    pub fn volume(&self, level: f64) -> f64 {
        self.count_at_least(level) * self.grid.alpha_prime().powi(self.grid.dim() as i32)
    }
}

const SCREEN_DIRECTIONS: usize = 32;

/// Halfplane counts along fixed directions, bounding planar depth from above.
struct HalfplaneScreen {
    dirs: Vec<[f64; 2]>,
    sorted: Vec<Vec<f64>>,
    tol: f64,
}

impl HalfplaneScreen {
    fn new(pts: &[[f64; 2]]) -> Self {
        let scale = pts
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(1.0, f64::max);
        let dirs: Vec<[f64; 2]> = (0..SCREEN_DIRECTIONS)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / SCREEN_DIRECTIONS as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let sorted = dirs
            .iter()
            .map(|v| {
                let mut s: Vec<f64> = pts.iter().map(|p| p[0] * v[0] + p[1] * v[1]).collect();
                s.sort_by(f64::total_cmp);
                s
            })
            .collect();
        HalfplaneScreen {
            dirs,
            sorted,
            tol: 1e-9 * scale,
        }
    }

    /// Smallest closed-halfplane count through `y` over the fixed
    /// directions. Near-ties are counted on both sides, so round-off can only
    /// raise the bound.
    fn upper_bound(&self, y: [f64; 2]) -> usize {
        self.dirs
            .iter()
            .zip(&self.sorted)
            .map(|(v, s)| {
                let c = y[0] * v[0] + y[1] * v[1];
                let at_most = s.partition_point(|&p| p <= c + self.tol);
                let at_least = s.len() - s.partition_point(|&p| p < c - self.tol);
                at_most.min(at_least)
            })
            .min()
            .unwrap_or(0)
    }
}
