//! Private preprocessing for the finite pipelines: eigenvalue estimation by
//! sample-and-aggregate, and per-coordinate range estimation.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dp::{argmax_released_bin, stable_histogram, CompositionLedger, PrivacyBudget};
use crate::error::{Error, Result};
use crate::linalg::{second_moment, sym_eigen};

/// Constant in the stable-histogram sample requirement `n ≥ (C/ε) ln(1/(βδ))`,
/// shared by the number of sample-and-aggregate blocks.
pub const STABLE_HISTOGRAM_C: f64 = 40.0;

/// Exponents outside this range are treated as out of float range.
pub const EXPONENT_MIN: i64 = -60;
pub const EXPONENT_MAX: i64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    /// Always `2^exponent`.
    pub value: f64,
    pub exponent: i64,
    pub index_k: usize,
}

/// One interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    pub per_coordinate: Vec<(f64, f64)>,
}

impl RangeEstimate {
    /// `α′ + max_j max(|lo_j|, |hi_j|)`.
    pub fn radius(&self, alpha_prime: f64) -> f64 {
        alpha_prime
            + self
                .per_coordinate
                .iter()
                .map(|(lo, hi)| lo.abs().max(hi.abs()))
                .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &Dataset) -> bool {
        x.rows().all(|r| {
            r.iter()
                .zip(&self.per_coordinate)
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
        })
    }
}

/// Number of sample-and-aggregate blocks, `⌈(C/ε) ln(1/(δβ))⌉`.
pub fn eigen_blocks(budget: PrivacyBudget, beta: f64) -> usize {
    (STABLE_HISTOGRAM_C / budget.epsilon() * (1.0 / (budget.delta() * beta)).ln()).ceil() as usize
}

/// Smallest sample count accepted by [`private_eigenvalue`].
pub fn eigen_min_samples(d: usize, budget: PrivacyBudget, beta: f64) -> usize {
    2 * eigen_blocks(budget, beta) * d
}

/// `⌊log₂ v⌋` read from the float representation, so powers of two are exact.
/// Nonpositive and subnormal inputs map below [`EXPONENT_MIN`].
pub fn floor_log2(v: f64) -> i64 {
    if !(v > 0.0) || !v.is_normal() {
        return EXPONENT_MIN - 1;
    }
    ((v.to_bits() >> 52) & 0x7ff) as i64 - 1023
}

fn clamp_exponent(q: i64) -> i64 {
    q.clamp(EXPONENT_MIN - 1, EXPONENT_MAX + 1)
}

/// Private estimate of the `k`-th largest eigenvalue of the second moment of
/// `u`, rounded down to a power of two.
///
/// Blocks whose eigenvalue falls outside `2^[-60, 60]` are counted in two
/// sentinel bins just past each end. Winning a sentinel bin is a failure.
pub fn private_eigenvalue(
    u: &Dataset,
    k: usize,
    budget: PrivacyBudget,
    beta: f64,
    rng: &mut impl RngCore,
    ledger: &mut CompositionLedger,
) -> Result<EigenEstimate> {
    let d = u.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue index {k} outside 1..={d}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) || budget.delta() <= 0.0 {
        return Err(Error::InvalidParameter(
            "need 0 < beta < 1 and delta > 0".into(),
        ));
    }
    let m = eigen_blocks(budget, beta);
    let needed = 2 * m * d;
    if u.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: u.len(),
        });
    }
    let block = u.len() / m;
    let exponents: Vec<i64> = (0..m)
        .map(|i| {
            let rows = (i * block..(i + 1) * block).map(|j| u.row(j));
            let ev = sym_eigen(&second_moment(rows, d)).values;
            clamp_exponent(floor_log2(ev[d - k]))
        })
        .collect();
    ledger.record(format!("eigen k={k}"), budget);
    let release = stable_histogram(&exponents, budget, rng)?;
    let q = argmax_released_bin(&release)
        .map_err(|_| Error::EstimationFailed(format!("eigenvalue k={k}: all bins suppressed")))?;
    if !(EXPONENT_MIN..=EXPONENT_MAX).contains(&q) {
        return Err(Error::EstimationFailed(format!(
            "eigenvalue k={k}: estimate outside 2^[{EXPONENT_MIN}, {EXPONENT_MAX}]"
        )));
    }
    Ok(EigenEstimate {
        value: 2f64.powi(q as i32),
        exponent: q,
        index_k: k,
    })
}

/// Half-width `11 σ ln(nd/β)` of every range interval.
pub fn range_half_width(sigma: f64, n: usize, d: usize, beta: f64) -> f64 {
    11.0 * sigma * ((n * d) as f64 / beta).ln()
}

/// Private per-coordinate range. Coordinate `j` is binned into
/// `[3σb, 3σ(b+1))` and released by a stable histogram with budget `(ε/d, δ/d)`.
pub fn private_range(
    x: &Dataset,
    sigma2: f64,
    budget: PrivacyBudget,
    beta: f64,
    rng: &mut impl RngCore,
    ledger: &mut CompositionLedger,
) -> Result<RangeEstimate> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "variance bound must be positive, got {sigma2}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter("need 0 < beta < 1".into()));
    }
    let (n, d) = (x.len(), x.dim());
    let sigma = sigma2.sqrt();
    let width = 3.0 * sigma;
    let half = range_half_width(sigma, n, d, beta);
    let per = budget.split(d);
    let mut per_coordinate = Vec::with_capacity(d);
    for j in 0..d {
        // `as` saturates, which keeps absurd inputs in the outermost bins.
        let bins: Vec<i64> = x.rows().map(|r| (r[j] / width).floor() as i64).collect();
        ledger.record(format!("range coordinate {j}"), per);
        let release = stable_histogram(&bins, per, rng)?;
        let b = argmax_released_bin(&release).map_err(|_| {
            Error::EstimationFailed(format!("range coordinate {j}: all bins suppressed"))
        })?;
        let center = width * b as f64;
        per_coordinate.push((center - half, center + half));
    }
    Ok(RangeEstimate { per_coordinate })
}
