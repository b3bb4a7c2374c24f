//! Empirically rescaled Gaussian mechanism.
//!
//! A dataset of `3n` points is split into thirds: pairs `(x_i, x_{i+n})`
//! from the first two thirds estimate the covariance, the last third the
//! mean. The mechanism releases `N(μ_x̃, C² Σ_x̃)` for a projection `x̃` of the
//! data onto the λ-good set, after a propose-test-release check that the
//! data is close to good.

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dp::{CompositionLedger, PrivacyBudget};
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, sample_mean, second_moment, PsdMatrix};
use crate::outcome::Outcome;
use crate::range_eigen::{private_eigenvalue, private_range};
use crate::rng::{laplace, permutation, standard_normal};
use crate::stats::median;
use crate::tukey::grid::GridSpec;
use crate::tukey::pipeline::snap_dataset;

/// Constant in `λ = c_λ d ln(3n/β)`.
pub const C_LAMBDA: f64 = 2.0;

/// Largest instance the exact projection accepts: points and grid cells.
pub const EXACT_MAX_POINTS: usize = 9;
pub const EXACT_MAX_CELLS: f64 = 8.0;

/// A dataset of `3n` points with the role of each third fixed by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDataset {
    points: Dataset,
    n: usize,
}

impl TripleDataset {
    pub fn new(points: Dataset) -> Result<Self> {
        if points.is_empty() || !points.len().is_multiple_of(3) {
            return Err(Error::BadShape(format!(
                "need a positive multiple of 3 points, got {}",
                points.len()
            )));
        }
        let n = points.len() / 3;
        Ok(TripleDataset { points, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &Dataset {
        &self.points
    }

    pub fn into_points(self) -> Dataset {
        self.points
    }
}

/// `μ_x = (1/n) Σ x_{i+2n}` and `Σ_x = (1/2n) Σ (x_i − x_{i+n})(x_i − x_{i+n})ᵀ`.
pub fn empirical_mean_cov(x: &TripleDataset) -> Result<(Vec<f64>, PsdMatrix)> {
    let n = x.n;
    let d = x.dim();
    let p = &x.points;
    let mu = sample_mean((2 * n..3 * n).map(|i| p.row(i)), d);
    let diffs = (0..n).map(|i| {
        p.row(i)
            .iter()
            .zip(p.row(i + n))
            .map(|(a, b)| a - b)
            .collect::<Vec<f64>>()
    });
    let sigma = PsdMatrix::new(second_moment(diffs, d) * 0.5)?;
    Ok((mu, sigma))
}

/// Result of the λ-goodness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub good: bool,
    /// Point with the largest `‖x_i − μ_x‖²_{Σ_x}`; `None` when `Σ_x` is singular.
    pub worst_index: Option<usize>,
    pub worst_value: f64,
}

/// `Σ_x` invertible and `‖x_i − μ_x‖²_{Σ_x} ≤ λ` for every point.
pub fn goodness_check(x: &TripleDataset, lambda: f64) -> Goodness {
    let singular = Goodness {
        good: false,
        worst_index: None,
        worst_value: f64::INFINITY,
    };
    let (mu, sigma) = match empirical_mean_cov(x) {
        Ok(v) => v,
        Err(_) => return singular,
    };
    let inv = match sigma.inverse() {
        Ok(m) => m,
        Err(_) => return singular,
    };
    let d = x.dim();
    let mut worst = (0, f64::NEG_INFINITY);
    let mut diff = vec![0.0; d];
    for (i, r) in x.points.rows().enumerate() {
        for j in 0..d {
            diff[j] = r[j] - mu[j];
        }
        let q = quad_form(&inv, &diff);
        if q > worst.1 {
            worst = (i, q);
        }
    }
    Goodness {
        good: worst.1 <= lambda,
        worst_index: Some(worst.0),
        worst_value: worst.1,
    }
}

fn quad_form(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let d = v.len();
    let mut acc = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += a[(i, j)] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}

/// `λ = c_λ d ln(3n/β)` with the module constant [`C_LAMBDA`].
pub fn lambda_default(n: f64, d: usize, beta: f64) -> f64 {
    lambda_with_constant(C_LAMBDA, n, d, beta)
}

pub fn lambda_with_constant(c_lambda: f64, n: f64, d: usize, beta: f64) -> f64 {
    c_lambda * d as f64 * (3.0 * n / beta).ln()
}

/// Parameters derived from `(n, ε, δ, β, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessParams {
    pub lambda: f64,
    /// Closeness radius `⌈(2/ε) ln(1/(δβ)) + 1⌉`.
    pub k: usize,
    /// `C²`, defined only when `2kλ < n`.
    pub c2: Option<f64>,
    /// Test threshold `(1/ε) ln(1/β)`.
    pub t_threshold: f64,
}

pub fn closeness_k(budget: PrivacyBudget, beta: f64) -> usize {
    (2.0 / budget.epsilon() * (1.0 / (budget.delta() * beta)).ln() + 1.0).ceil() as usize
}

/// `C² = 32k²/(ε²n²) · λ/(1 − 2kλ/n) · ln(1.25/δ)`.
pub fn c_squared(k: usize, lambda: f64, n: usize, budget: PrivacyBudget) -> Option<f64> {
    let (k, n) = (k as f64, n as f64);
    let shrink = 1.0 - 2.0 * k * lambda / n;
    if !(shrink > 0.0) {
        return None;
    }
    let eps = budget.epsilon();
    Some(32.0 * k * k / (eps * eps * n * n) * (lambda / shrink) * (1.25 / budget.delta()).ln())
}

impl GoodnessParams {
    pub fn new(n: usize, budget: PrivacyBudget, beta: f64, lambda: f64) -> Self {
        let k = closeness_k(budget, beta);
        GoodnessParams {
            lambda,
            k,
            c2: c_squared(k, lambda, n, budget),
            t_threshold: (1.0 / beta).ln() / budget.epsilon(),
        }
    }
}

/// Sample-size gate: `n > 2kλ` and `ε ≥ 10kλ(1/(n − 2kλ) + 1/n) ln(2/δ)`.
pub fn gate_passes(n: usize, params: &GoodnessParams, budget: PrivacyBudget) -> bool {
    let n = n as f64;
    let kl = params.k as f64 * params.lambda;
    if !(n > 2.0 * kl) {
        return false;
    }
    let need = 10.0 * kl * (1.0 / (n - 2.0 * kl) + 1.0 / n) * (2.0 / budget.delta()).ln();
    budget.epsilon() >= need
}

/// Smallest `n` passing the gate with `λ = c_λ d ln(3n/β)`.
pub fn min_gate_n(d: usize, budget: PrivacyBudget, beta: f64, c_lambda: f64) -> usize {
    let passes = |n: usize| {
        let lambda = lambda_with_constant(c_lambda, n as f64, d, beta);
        gate_passes(n, &GoodnessParams::new(n, budget, beta, lambda), budget)
    };
    let mut hi = 1usize;
    while !passes(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    Exact,
    Greedy,
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ProjectionMode::Exact),
            "greedy" => Ok(ProjectionMode::Greedy),
            other => Err(Error::InvalidParameter(format!(
                "unknown projection mode `{other}`"
            ))),
        }
    }
}

/// Hamming distance to the λ-good set and a dataset attaining it.
///
/// Exact mode searches grid datasets by increasing distance, over changed
/// index sets in lexicographic order, so the first hit is the minimizer
/// with the smallest index set. Greedy mode repeatedly replaces the
/// goodness witness with the coordinate-wise median of the untouched points
/// (snapped to the grid if one is given) and returns an upper bound.
pub fn distance_to_good(
    x: &TripleDataset,
    lambda: f64,
    grid: Option<&GridSpec>,
    mode: ProjectionMode,
) -> Result<(usize, TripleDataset)> {
    match mode {
        ProjectionMode::Exact => {
            let grid = grid
                .ok_or_else(|| Error::InvalidParameter("exact projection needs a grid".into()))?;
            exact_projection(x, lambda, grid)
        }
        ProjectionMode::Greedy => greedy_projection(x, lambda, grid),
    }
}

fn grid_points(grid: &GridSpec) -> Vec<Vec<f64>> {
    let d = grid.dim();
    let per = grid.per_axis();
    let total = grid.total_cells() as u64;
    (0..total)
        .map(|mut c| {
            let mut idx = vec![0u64; d];
            for j in (0..d).rev() {
                idx[j] = c % per;
                c /= per;
            }
            grid.center_of(&idx)
        })
        .collect()
}

fn exact_projection(
    x: &TripleDataset,
    lambda: f64,
    grid: &GridSpec,
) -> Result<(usize, TripleDataset)> {
    let len = x.points.len();
    if len > EXACT_MAX_POINTS || grid.total_cells() > EXACT_MAX_CELLS || grid.dim() != x.dim() {
        return Err(Error::InstanceTooLarge(format!(
            "exact projection needs at most {EXACT_MAX_POINTS} points and {EXACT_MAX_CELLS} cells, got {len} points and {} cells",
            grid.total_cells()
        )));
    }
    let cells = grid_points(grid);
    let c = cells.len();
    let mut z = x.clone();
    for h in 0..=len {
        let mut subset: Vec<usize> = (0..h).collect();
        loop {
            let mut digits = vec![0usize; h];
            loop {
                for (&pos, &cell) in subset.iter().zip(&digits) {
                    z.points.set_row(pos, &cells[cell]);
                }
                if goodness_check(&z, lambda).good {
                    return Ok((h, z));
                }
                if !increment(&mut digits, c) {
                    break;
                }
            }
            for &pos in &subset {
                z.points.set_row(pos, x.points.row(pos));
            }
            if !next_combination(&mut subset, len) {
                break;
            }
        }
    }
    Err(Error::ProjectionFailed)
}

// Base-`base` counter with the first digit most significant.
fn increment(digits: &mut [usize], base: usize) -> bool {
    for v in digits.iter_mut().rev() {
        *v += 1;
        if *v < base {
            return true;
        }
        *v = 0;
    }
    false
}

// Next `k`-subset of `0..n` in lexicographic order.
fn next_combination(s: &mut [usize], n: usize) -> bool {
    let k = s.len();
    for i in (0..k).rev() {
        if s[i] < n - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn greedy_projection(
    x: &TripleDataset,
    lambda: f64,
    grid: Option<&GridSpec>,
) -> Result<(usize, TripleDataset)> {
    let len = x.points.len();
    let d = x.dim();
    let mut z = x.clone();
    let mut touched = vec![false; len];
    let mut h = 0;
    loop {
        let g = goodness_check(&z, lambda);
        if g.good {
            return Ok((h, z));
        }
        let w = match g.worst_index {
            Some(w) if !touched[w] && h < x.n => w,
            _ => return Err(Error::ProjectionFailed),
        };
        let mut m: Vec<f64> = (0..d)
            .map(|j| {
                let col: Vec<f64> = (0..len)
                    .filter(|&i| !touched[i] && i != w)
                    .map(|i| z.points.row(i)[j])
                    .collect();
                median(&col)
            })
            .collect();
        if let Some(g) = grid {
            m = g.snap(&m);
        }
        z.points.set_row(w, &m);
        touched[w] = true;
        h += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledConfig {
    pub c_lambda: f64,
    /// Overrides `λ = c_λ d ln(3n/β)` when set.
    pub lambda: Option<f64>,
    pub projection: ProjectionMode,
    /// Grid the projection is restricted to, if any.
    pub grid: Option<GridSpec>,
}

impl Default for RescaledConfig {
    fn default() -> Self {
        RescaledConfig {
            c_lambda: C_LAMBDA,
            lambda: None,
            projection: ProjectionMode::Greedy,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledReport {
    pub params: GoodnessParams,
    pub gate_passed: bool,
    /// Distance to the good set; `None` when the gate failed or the
    /// projection could not be completed.
    pub distance: Option<usize>,
    pub noise: Option<f64>,
    pub outcome: Outcome,
}

/// The mechanism is `(3ε, e^ε(1 + e^ε)δ)`-differentially private.
pub fn rescaled_gaussian_mechanism(
    x: &TripleDataset,
    budget: PrivacyBudget,
    beta: f64,
    config: &RescaledConfig,
    rng: &mut impl RngCore,
) -> Result<Outcome> {
    Ok(rescaled_gaussian_report(x, budget, beta, config, rng)?.outcome)
}

pub fn rescaled_gaussian_report(
    x: &TripleDataset,
    budget: PrivacyBudget,
    beta: f64,
    config: &RescaledConfig,
    rng: &mut impl RngCore,
) -> Result<RescaledReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "β must lie in (0, 1), got {beta}"
        )));
    }
    let n = x.n;
    let d = x.dim();
    let lambda = config
        .lambda
        .unwrap_or_else(|| lambda_with_constant(config.c_lambda, n as f64, d, beta));
    let params = GoodnessParams::new(n, budget, beta, lambda);
    let mut report = RescaledReport {
        params,
        gate_passed: false,
        distance: None,
        noise: None,
        outcome: Outcome::fail("size gate"),
    };
    if !gate_passes(n, &params, budget) {
        return Ok(report);
    }
    report.gate_passed = true;
    let c2 = params.c2.expect("gate implies 2kλ < n");

    let perm = permutation(rng, x.points.len());
    let shuffled = TripleDataset {
        points: x.points.permuted(&perm),
        n,
    };
    let projected = distance_to_good(&shuffled, lambda, config.grid.as_ref(), config.projection);
    let noise = laplace(rng, 1.0 / budget.epsilon());
    report.noise = Some(noise);
    let (h, proj) = match projected {
        Ok(v) => v,
        Err(Error::ProjectionFailed) => {
            report.outcome = Outcome::fail("projection failed");
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.distance = Some(h);
    if h as f64 + noise > params.t_threshold {
        report.outcome = Outcome::fail("distance test");
        return Ok(report);
    }
    let (mu, sigma) = empirical_mean_cov(&proj)?;
    let root = sigma.sqrt();
    let z: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
    let c = c2.sqrt();
    let y = mat_vec(&root, &z)
        .into_iter()
        .zip(&mu)
        .map(|(v, m)| m + c * v)
        .collect();
    report.outcome = Outcome::Estimate(y);
    Ok(report)
}

pub fn record_rescaled(ledger: &mut CompositionLedger, budget: PrivacyBudget) {
    let e = budget.epsilon().exp();
    ledger.record_guarantee(
        "rescaled gaussian",
        3.0 * budget.epsilon(),
        e * (1.0 + e) * budget.delta(),
    );
}

/// Finite implementation: private eigenvalue and range estimates choose a
/// grid with resolution
/// `α′ = α min{λ̂_d/λ̂₁ · 1/(d^{3/2} ln(n/β)), √(λ̂_d/d)}`, the data is
/// snapped to it, and the mechanism runs with its projection restricted to
/// the grid. `c_s` is the subgaussian constant of the data distribution.
#[allow(clippy::too_many_arguments)]
pub fn discrete_rescaled_pipeline(
    x: &TripleDataset,
    budget: PrivacyBudget,
    alpha: f64,
    beta: f64,
    c_s: f64,
    config: &RescaledConfig,
    rng: &mut impl RngCore,
    ledger: &mut CompositionLedger,
) -> Result<Outcome> {
    if !(alpha > 0.0 && c_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need α > 0 and c_s > 0, got α = {alpha}, c_s = {c_s}"
        )));
    }
    let n = x.n;
    let d = x.dim();
    let p = &x.points;
    let u = Dataset::new(
        d,
        (0..n)
            .flat_map(|i| {
                p.row(i)
                    .iter()
                    .zip(p.row(i + n))
                    .map(|(a, b)| (a - b) / std::f64::consts::SQRT_2)
                    .collect::<Vec<f64>>()
            })
            .collect(),
    )?;
    let l1 = private_eigenvalue(&u, 1, budget, beta, rng, ledger)?;
    let ld = private_eigenvalue(&u, d, budget, beta, rng, ledger)?;
    let range = private_range(p, 4.0 * c_s * l1.value, budget, beta, rng, ledger)?;
    let df = d as f64;
    let alpha_prime = alpha
        * (ld.value / l1.value / (df.powf(1.5) * (n as f64 / beta).ln()))
            .min((ld.value / df).sqrt());
    let grid = GridSpec::new(range.radius(alpha_prime), alpha_prime, d)?;
    let snapped = TripleDataset {
        points: snap_dataset(p, &grid),
        n,
    };
    let config = RescaledConfig {
        grid: Some(grid),
        ..config.clone()
    };
    let out = rescaled_gaussian_mechanism(&snapped, budget, beta, &config, rng)?;
    record_rescaled(ledger, budget);
    Ok(out)
}
