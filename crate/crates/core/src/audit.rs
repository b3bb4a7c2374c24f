//! Empirical and exact checks of privacy guarantees on adjacent datasets.

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dp::indistinguishability_delta;
use crate::error::{Error, Result};
use crate::linalg::{matrix_norms, PsdMatrix};
use crate::outcome::Outcome;
use crate::rng::{standard_normal, uniform_index};
use crate::stats::{clopper_pearson, quantile_ci};
use crate::synth::{synthesize, SynthSpec};
use crate::tukey::certificate::{certified_distance, default_gap};
use crate::tukey::exact::ExactSafety;
use crate::tukey::profile::DepthProfile;
use crate::tukey::ptr::ptr_fail_probability;

/// Confidence level of every interval reported here.
pub const CONFIDENCE: f64 = 0.99;

/// Largest number of output cells, FAIL included, for binned audits.
pub const MAX_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub epsilon_tested: f64,
    pub delta_hat: f64,
    pub confidence_interval: (f64, f64),
    pub trials: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStrategy {
    WorstSubspace,
    FarOutlier,
    RandomSwap,
}

impl std::str::FromStr for PairStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_subspace" => Ok(PairStrategy::WorstSubspace),
            "far_outlier" => Ok(PairStrategy::FarOutlier),
            "random_swap" => Ok(PairStrategy::RandomSwap),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacentPair {
    pub x: Dataset,
    pub x_prime: Dataset,
    pub changed_index: usize,
    pub strategy: PairStrategy,
}

/// Builds `x′` from `x` by changing one uniformly chosen row.
///
/// `worst_subspace` moves the row onto the affine span of the others,
/// `far_outlier` sends it to `10⁶ · max|x| · 1⃗`, and `random_swap` redraws
/// it from `source`, which that strategy requires.
pub fn adjacent_pair(
    x: &Dataset,
    strategy: PairStrategy,
    source: Option<&SynthSpec>,
    rng: &mut impl RngCore,
) -> Result<AdjacentPair> {
    if x.is_empty() {
        return Err(Error::InvalidParameter(
            "adjacent pair of empty data".into(),
        ));
    }
    let i = uniform_index(rng, x.len());
    let d = x.dim();
    let new_row = match strategy {
        PairStrategy::FarOutlier => {
            let m = x.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            vec![1e6 * if m > 0.0 { m } else { 1.0 }; d]
        }
        PairStrategy::RandomSwap => {
            let spec = source.ok_or_else(|| {
                Error::InvalidParameter("random_swap needs the data distribution".into())
            })?;
            let one = SynthSpec {
                n: 1,
                ..spec.clone()
            };
            synthesize(&one, rng).row(0).to_vec()
        }
        PairStrategy::WorstSubspace => project_onto_others(x, i),
    };
    let mut x_prime = x.clone();
    x_prime.set_row(i, &new_row);
    Ok(AdjacentPair {
        x: x.clone(),
        x_prime,
        changed_index: i,
        strategy,
    })
}

fn project_onto_others(x: &Dataset, i: usize) -> Vec<f64> {
    let d = x.dim();
    let others: Vec<&[f64]> = (0..x.len()).filter(|&j| j != i).map(|j| x.row(j)).collect();
    if others.is_empty() {
        return x.row(i).to_vec();
    }
    let m = crate::linalg::sample_mean(others.iter(), d);
    let centered = others
        .iter()
        .map(|r| r.iter().zip(&m).map(|(a, b)| a - b).collect::<Vec<f64>>());
    let scatter = crate::linalg::second_moment(centered, d);
    let eig = crate::linalg::sym_eigen(&scatter);
    let top = eig.values.iter().fold(0.0f64, |a, &v| a.max(v));
    let v: Vec<f64> = x.row(i).iter().zip(&m).map(|(a, b)| a - b).collect();
    let mut out = m.clone();
    for k in 0..d {
        if eig.values[k] > 1e-12 * top && top > 0.0 {
            let col = eig.vectors.column(k);
            let c: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
            for j in 0..d {
                out[j] += c * col[j];
            }
        }
    }
    out
}

/// `ln p₁(w) − ln p₂(w)` for two Gaussians.
pub fn gaussian_log_ratio(
    w: &[f64],
    mu1: &[f64],
    s1: &PsdMatrix,
    mu2: &[f64],
    s2: &PsdMatrix,
) -> Result<f64> {
    let a: Vec<f64> = w.iter().zip(mu1).map(|(x, m)| x - m).collect();
    let b: Vec<f64> = w.iter().zip(mu2).map(|(x, m)| x - m).collect();
    Ok(
        -0.5 * s1.inv_quad_form(&a)? + 0.5 * s2.inv_quad_form(&b)? - 0.5 * s1.log_det()?
            + 0.5 * s2.log_det()?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate {
    pub epsilon_hat: f64,
    pub confidence_interval: (f64, f64),
    pub trials: usize,
}

/// Empirical `(1−δ)`-quantile of the absolute privacy loss between
/// `N(μ₁, Σ₁)` and `N(μ₂, Σ₂)`, over draws from each side; the larger of
/// the two directions is reported.
pub fn gaussian_pair_privacy_loss(
    mu1: &[f64],
    sigma1: &PsdMatrix,
    mu2: &[f64],
    sigma2: &PsdMatrix,
    delta: f64,
    trials: usize,
    rng: &mut impl RngCore,
) -> Result<LossEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let d = mu1.len();
    let mut best = None::<LossEstimate>;
    for (mu, s) in [(mu1, sigma1), (mu2, sigma2)] {
        let root = s.sqrt();
        let mut losses = Vec::with_capacity(trials);
        let mut z = vec![0.0; d];
        for _ in 0..trials {
            for v in z.iter_mut() {
                *v = standard_normal(rng);
            }
            let w: Vec<f64> = crate::linalg::mat_vec(&root, &z)
                .iter()
                .zip(mu)
                .map(|(a, m)| a + m)
                .collect();
            losses.push(gaussian_log_ratio(&w, mu1, sigma1, mu2, sigma2)?.abs());
        }
        losses.sort_by(f64::total_cmp);
        let (lo, point, hi) = quantile_ci(&losses, 1.0 - delta, CONFIDENCE);
        let est = LossEstimate {
            epsilon_hat: point,
            confidence_interval: (lo, hi),
            trials,
        };
        if best.is_none_or(|b| est.epsilon_hat > b.epsilon_hat) {
            best = Some(est);
        }
    }
    Ok(best.expect("two directions"))
}

/// Exact `δ̂(ε)` between two explicit distributions, both directions.
pub fn exact_hockey_stick(p: &[f64], q: &[f64], epsilon: f64) -> DivergenceReport {
    let delta_hat = indistinguishability_delta(p, q, epsilon);
    DivergenceReport {
        epsilon_tested: epsilon,
        delta_hat,
        confidence_interval: (delta_hat, delta_hat),
        trials: 0,
        exact: true,
    }
}

/// Data-independent binning of continuous outputs: a box split into
/// `per_axis^d` cells, one overflow cell, and the FAIL atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBinning {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_axis: usize,
}

impl OutputBinning {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, per_axis: usize) -> Result<Self> {
        let d = lo.len();
        let cells = (per_axis as f64).powi(d as i32) + 2.0;
        if d == 0 || hi.len() != d || per_axis == 0 || cells > MAX_BINS as f64 {
            return Err(Error::InvalidParameter(format!(
                "binning of {per_axis}^{d} cells exceeds {MAX_BINS} or is malformed"
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("empty binning box".into()));
        }
        Ok(OutputBinning { lo, hi, per_axis })
    }

    pub fn cells(&self) -> usize {
        self.per_axis.pow(self.lo.len() as u32) + 2
    }

    /// Cell of an outcome; the last two cells are overflow and FAIL.
    pub fn cell(&self, outcome: &Outcome) -> usize {
        let inner = self.cells() - 2;
        let y = match outcome {
            Outcome::Fail { .. } => return inner + 1,
            Outcome::Estimate(y) => y,
        };
        let mut idx = 0;
        for (j, &v) in y.iter().enumerate() {
            let f = (v - self.lo[j]) / (self.hi[j] - self.lo[j]);
            if !(0.0..1.0).contains(&f) {
                return inner;
            }
            idx =
                idx * self.per_axis + ((f * self.per_axis as f64) as usize).min(self.per_axis - 1);
        }
        idx
    }
}

/// Monte-Carlo `δ̂(ε)` of `mechanism` on an adjacent pair.
///
/// Outputs are binned with a grid fixed before sampling, so the estimate is
/// a lower bound on the true divergence up to sampling error. The interval
/// combines 99.5% Clopper–Pearson bounds on the masses of the maximizing
/// event under each input.
pub fn mc_hockey_stick<R: RngCore>(
    mut mechanism: impl FnMut(&Dataset, &mut R) -> Outcome,
    pair: &AdjacentPair,
    binning: &OutputBinning,
    epsilon: f64,
    trials: u64,
    rng: &mut R,
) -> DivergenceReport {
    let c = binning.cells();
    let mut counts = [vec![0u64; c], vec![0u64; c]];
    for (side, x) in [&pair.x, &pair.x_prime].into_iter().enumerate() {
        for _ in 0..trials {
            counts[side][binning.cell(&mechanism(x, rng))] += 1;
        }
    }
    hockey_stick_from_counts(&counts[0], &counts[1], epsilon, trials)
}

/// `δ̂(ε)` and its interval from two histograms of `trials` outputs each.
pub fn hockey_stick_from_counts(
    a: &[u64],
    b: &[u64],
    epsilon: f64,
    trials: u64,
) -> DivergenceReport {
    let e = epsilon.exp();
    let t = trials.max(1) as f64;
    let mut best = (0.0, (0.0, 0.0));
    for (p, q) in [(a, b), (b, a)] {
        let (mut pe, mut qe) = (0u64, 0u64);
        for (&x, &y) in p.iter().zip(q) {
            if x as f64 > e * y as f64 {
                pe += x;
                qe += y;
            }
        }
        let point = (pe as f64 / t - e * qe as f64 / t).max(0.0);
        let conf = 1.0 - (1.0 - CONFIDENCE) / 2.0;
        let (p_lo, p_hi) = clopper_pearson(pe, trials, conf);
        let (q_lo, q_hi) = clopper_pearson(qe, trials, conf);
        let lo = (p_lo - e * q_hi).max(0.0);
        let hi = (p_hi - e * q_lo).clamp(point, 1.0);
        if point > best.0 || (point == best.0 && hi > best.1 .1) {
            best = (point, (lo.min(point), hi));
        }
    }
    DivergenceReport {
        epsilon_tested: epsilon,
        delta_hat: best.0,
        confidence_interval: best.1,
        trials,
        exact: false,
    }
}

/// Which distance the exact PTR audit feeds to the noisy test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditDistance {
    Exact,
    Certificate,
}

/// Exact output distribution of Tukey PTR on the multiset `counts`, as
/// cell masses followed by the FAIL atom.
pub fn tukey_ptr_distribution(
    safety: &ExactSafety,
    counts: &[u8],
    distance: AuditDistance,
) -> Result<Vec<f64>> {
    let h = match distance {
        AuditDistance::Exact => safety.distance_counts(counts),
        AuditDistance::Certificate => {
            let x = dataset_from_counts(safety, counts);
            let profile = DepthProfile::compute(&x, safety.grid())?;
            certified_distance(
                &profile,
                safety.budget(),
                safety.t(),
                default_gap(safety.n()),
            )
        }
    };
    let p_fail = ptr_fail_probability(h, safety.budget());
    let mut out = safety.distribution(counts);
    for v in out.iter_mut() {
        *v *= 1.0 - p_fail;
    }
    *out.last_mut().expect("fail atom") += p_fail;
    Ok(out)
}

/// Grid dataset with the given cell counts, sorted by cell.
pub fn dataset_from_counts(safety: &ExactSafety, counts: &[u8]) -> Dataset {
    let g = safety.grid();
    let v: Vec<f64> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat_n(g.axis_center(c as u64), k as usize))
        .collect();
    Dataset::from_scalars(&v)
}

/// Largest exact `δ̂(ε)` between Tukey PTR on `counts` and on any
/// one-replacement neighbor.
pub fn tukey_neighbor_audit(
    safety: &ExactSafety,
    counts: &[u8],
    epsilon: f64,
    distance: AuditDistance,
) -> Result<DivergenceReport> {
    let base = tukey_ptr_distribution(safety, counts, distance)?;
    let cells = counts.len();
    let mut worst = exact_hockey_stick(&base, &base, epsilon);
    let mut nb = counts.to_vec();
    for from in (0..cells).filter(|&c| counts[c] > 0) {
        for to in (0..cells).filter(|&c| c != from) {
            nb.copy_from_slice(counts);
            nb[from] -= 1;
            nb[to] += 1;
            let other = tukey_ptr_distribution(safety, &nb, distance)?;
            let r = exact_hockey_stick(&base, &other, epsilon);
            if r.delta_hat > worst.delta_hat {
                worst = r;
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HansonWrightReport {
    pub violations: u64,
    pub trials: u64,
    pub rate: f64,
    pub confidence_interval: (f64, f64),
    /// The violation rate is consistent with `≤ β`.
    pub passed: bool,
}

/// Two-sided bound on `uᵀDu` for `u ~ N(0, I)`:
/// `tr D − 2‖D‖_F√L ≤ uᵀDu ≤ tr D + 2‖D‖_F√L + 2‖D‖₂L` with `L = ln(2/β)`.
pub fn hanson_wright_check(
    dmatrix: &DMatrix<f64>,
    beta: f64,
    trials: u64,
    rng: &mut impl RngCore,
) -> Result<HansonWrightReport> {
    let d = dmatrix.nrows();
    if d == 0 || dmatrix.ncols() != d || !dmatrix.iter().all(|v| v.is_finite()) {
        return Err(Error::BadShape("need a finite square matrix".into()));
    }
    let norms = matrix_norms(dmatrix);
    let l = (2.0 / beta).ln();
    let tr = dmatrix.trace();
    let lower = tr - 2.0 * norms.frobenius * l.sqrt();
    let upper = tr + 2.0 * norms.frobenius * l.sqrt() + 2.0 * norms.spectral * l;
    let mut violations = 0;
    let mut u = nalgebra::DVector::zeros(d);
    for _ in 0..trials {
        for v in u.iter_mut() {
            *v = standard_normal(rng);
        }
        let q = u.dot(&(dmatrix * &u));
        if q < lower || q > upper {
            violations += 1;
        }
    }
    let ci = clopper_pearson(violations, trials, CONFIDENCE);
    Ok(HansonWrightReport {
        violations,
        trials,
        rate: violations as f64 / trials.max(1) as f64,
        confidence_interval: ci,
        passed: ci.0 <= beta,
    })
}
