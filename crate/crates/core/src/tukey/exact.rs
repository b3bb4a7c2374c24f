//! Exact `D_H(x, UNSAFE)` for tiny one-dimensional grid instances.
//!
//! The restricted sampler depends on a dataset only through its multiset of
//! cells, so safety is decided per multiset. Each multiset is checked against
//! every one-replacement neighbor with the exact hockey-stick divergence of
//! the two explicit output distributions. An empty support is an extra
//! output atom.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::dp::{indistinguishability_delta, PrivacyBudget};
use crate::error::{Error, Result};
use crate::tukey::grid::GridSpec;

pub const MAX_N: usize = 6;
pub const MAX_CELLS: u64 = 12;

// Slack for float round-off when comparing a divergence against δ.
const DELTA_SLACK: f64 = 1e-12;

/// Safety table for every grid multiset of a given size.
#[derive(Debug, Clone)]
pub struct ExactSafety {
    grid: GridSpec,
    n: usize,
    multisets: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    unsafe_: Vec<bool>,
    budget: PrivacyBudget,
    t: f64,
}

/// Explicit restricted-sampler distribution over `cells` outputs plus a
/// trailing empty-support atom, for the multiset with cell `counts`.
pub fn tiny_distribution(counts: &[u8], epsilon: f64, t: f64) -> Vec<f64> {
    let c = counts.len();
    let n: usize = counts.iter().map(|&v| v as usize).sum();
    let mut depth = vec![0usize; c];
    let mut below = 0usize;
    for i in 0..c {
        let at_most = below + counts[i] as usize;
        let at_least = n - below;
        depth[i] = at_most.min(at_least);
        below = at_most;
    }
    let mut out = vec![0.0; c + 1];
    let eligible: Vec<usize> = (0..c).filter(|&i| depth[i] as f64 >= t).collect();
    if eligible.is_empty() {
        out[c] = 1.0;
        return out;
    }
    let top = eligible.iter().map(|&i| depth[i]).max().unwrap_or(0) as f64;
    for &i in &eligible {
        out[i] = (epsilon * (depth[i] as f64 - top) / 2.0).exp();
    }
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    out
}

fn enumerate(cells: usize, n: usize) -> Vec<Vec<u8>> {
    fn rec(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left as u8;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v as u8;
            rec(pos + 1, left - v, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, &mut vec![0; cells], &mut out);
    out
}

impl ExactSafety {
    pub fn build(grid: &GridSpec, n: usize, budget: PrivacyBudget, t: f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InstanceTooLarge(format!(
                "exact oracle needs d = 1, got {}",
                grid.dim()
            )));
        }
        if n == 0 || n > MAX_N || grid.per_axis() > MAX_CELLS {
            return Err(Error::InstanceTooLarge(format!(
                "exact oracle needs 1 ≤ n ≤ {MAX_N} and at most {MAX_CELLS} cells, got n = {n} with {} cells",
                grid.per_axis()
            )));
        }
        let cells = grid.per_axis() as usize;
        let eps = budget.epsilon();
        let multisets = enumerate(cells, n);
        let index: HashMap<Vec<u8>, usize> = multisets
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let dists: Vec<Vec<f64>> = multisets
            .iter()
            .map(|m| tiny_distribution(m, eps, t))
            .collect();
        let mut unsafe_ = vec![false; multisets.len()];
        let mut nb = vec![0u8; cells];
        for (i, m) in multisets.iter().enumerate() {
            for from in (0..cells).filter(|&c| m[c] > 0) {
                for to in (0..cells).filter(|&c| c != from) {
                    nb.copy_from_slice(m);
                    nb[from] -= 1;
                    nb[to] += 1;
                    let j = index[&nb];
                    if j < i {
                        // Pair already examined from the other side.
                        continue;
                    }
                    if indistinguishability_delta(&dists[i], &dists[j], eps)
                        > budget.delta() + DELTA_SLACK
                    {
                        unsafe_[i] = true;
                        unsafe_[j] = true;
                    }
                }
            }
        }
        Ok(ExactSafety {
            grid: *grid,
            n,
            multisets,
            index,
            unsafe_,
            budget,
            t,
        })
    }

    pub fn budget(&self) -> PrivacyBudget {
        self.budget
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.grid.per_axis() as usize
    }

    /// Cell counts of `x` after snapping to the grid.
    pub fn counts(&self, x: &Dataset) -> Result<Vec<u8>> {
        if x.dim() != 1 || x.len() != self.n {
            return Err(Error::BadShape(format!(
                "expected {} scalar rows, got {}x{}",
                self.n,
                x.len(),
                x.dim()
            )));
        }
        let mut c = vec![0u8; self.cells()];
        for &v in x.as_slice() {
            c[self.grid.axis_index(v) as usize] += 1;
        }
        Ok(c)
    }

    pub fn is_safe_counts(&self, counts: &[u8]) -> bool {
        !self.unsafe_[self.index[counts]]
    }

    pub fn is_safe(&self, x: &Dataset) -> Result<bool> {
        Ok(self.is_safe_counts(&self.counts(x)?))
    }

    /// Minimum Hamming distance from `x` to an unsafe grid dataset, or
    /// `n + 1` when every grid dataset is safe.
    pub fn distance_counts(&self, counts: &[u8]) -> usize {
        self.multisets
            .iter()
            .zip(&self.unsafe_)
            .filter(|(_, &u)| u)
            .map(|(m, _)| {
                let overlap: usize = m.iter().zip(counts).map(|(&a, &b)| a.min(b) as usize).sum();
                self.n - overlap
            })
            .min()
            .unwrap_or(self.n + 1)
    }

    pub fn distance(&self, x: &Dataset) -> Result<usize> {
        Ok(self.distance_counts(&self.counts(x)?))
    }

    pub fn multisets(&self) -> &[Vec<u8>] {
        &self.multisets
    }

    /// Sampler distribution for `counts`, with the empty-support atom last.
    pub fn distribution(&self, counts: &[u8]) -> Vec<f64> {
        tiny_distribution(counts, self.budget.epsilon(), self.t)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

/// Exact `D_H(x, UNSAFE_(ε,δ,t))` over grid datasets.
pub fn exact_unsafe_distance(
    x: &Dataset,
    grid: &GridSpec,
    budget: PrivacyBudget,
    t: f64,
) -> Result<usize> {
    ExactSafety::build(grid, x.len(), budget, t)?.distance(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_size() {
        // C(cells + n − 1, n)
        assert_eq!(enumerate(5, 4).len(), 70);
        assert_eq!(enumerate(12, 6).len(), 12376);
    }

    #[test]
    fn all_safe_gives_sentinel() {
        let g = GridSpec::with_cells(4, 1.0, 1).unwrap();
        let b = PrivacyBudget::new(1.0, 0.999_999).unwrap();
        let x = Dataset::from_scalars(&[-0.5, 0.5, 0.5]);
        assert_eq!(exact_unsafe_distance(&x, &g, b, 0.75).unwrap(), 4);
    }

    #[test]
    fn unsafe_input_has_distance_zero() {
        // With tiny δ every multiset whose neighbor changes the support is unsafe.
        let g = GridSpec::with_cells(3, 1.0, 1).unwrap();
        let b = PrivacyBudget::new(0.1, 1e-9).unwrap();
        let x = Dataset::from_scalars(&[-1.0, 0.0, 1.0]);
        assert_eq!(exact_unsafe_distance(&x, &g, b, 0.75).unwrap(), 0);
    }

    #[test]
    fn rejects_large_instances() {
        let g = GridSpec::with_cells(13, 1.0, 1).unwrap();
        let b = PrivacyBudget::new(1.0, 0.1).unwrap();
        let x = Dataset::from_scalars(&[0.0; 3]);
        assert!(matches!(
            exact_unsafe_distance(&x, &g, b, 0.75),
            Err(Error::InstanceTooLarge(_))
        ));
        let g = GridSpec::with_cells(4, 1.0, 1).unwrap();
        let x = Dataset::from_scalars(&[0.0; 7]);
        assert!(exact_unsafe_distance(&x, &g, b, 0.75).is_err());
    }

    #[test]
    fn distribution_of_tiny_multiset() {
        // counts (1, 2, 0): depths min(≤, ≥) = (1, 2, 0)
        let d = tiny_distribution(&[1, 2, 0], 2.0, 1.0);
        let e = 1f64.exp();
        assert!((d[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((d[1] - e / (1.0 + e)).abs() < 1e-12);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[3], 0.0);
        assert_eq!(tiny_distribution(&[1, 0, 1], 1.0, 2.0)[3], 1.0);
    }
}
