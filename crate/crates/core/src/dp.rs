//! Base differentially private building blocks: calibrated Laplace and
//! Gaussian noise, the stable histogram, and a basic-composition ledger.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{laplace, standard_normal};

/// An `(ε, δ)` pair with `ε > 0` and `0 ≤ δ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Budget divided evenly over `parts` sub-mechanisms.
    pub fn split(&self, parts: usize) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.epsilon / parts as f64,
            delta: self.delta / parts as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
    pub delta: f64,
}

/// Record of every budget spent, totalled by basic composition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompositionLedger {
    entries: Vec<LedgerEntry>,
}

impl CompositionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, label: impl Into<String>, budget: PrivacyBudget) {
        self.entries.push(LedgerEntry {
            label: label.into(),
            epsilon: budget.epsilon,
            delta: budget.delta,
        });
    }

    /// Records a composed guarantee such as `(2ε, e^ε δ)`, whose `δ` is not
    /// a spendable budget and may reach 1.
    pub fn record_guarantee(&mut self, label: impl Into<String>, epsilon: f64, delta: f64) {
        self.entries.push(LedgerEntry {
            label: label.into(),
            epsilon,
            delta,
        });
    }

    pub fn absorb(&mut self, other: CompositionLedger) {
        self.entries.extend(other.entries);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// `(Σ εᵢ, Σ δᵢ)`.
    pub fn total(&self) -> (f64, f64) {
        self.entries
            .iter()
            .fold((0.0, 0.0), |(e, d), x| (e + x.epsilon, d + x.delta))
    }
}

/// `value + Lap(sensitivity / ε)`.
pub fn laplace_mechanism(
    value: f64,
    sensitivity: f64,
    epsilon: f64,
    rng: &mut impl RngCore,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be finite and nonnegative, got {sensitivity}"
        )));
    }
    if sensitivity == 0.0 {
        return Ok(value);
    }
    Ok(value + laplace(rng, sensitivity / epsilon))
}

/// Noise scale `Δ √(2 ln(1.25/δ)) / ε` of the Gaussian mechanism.
pub fn gaussian_sigma(l2_sensitivity: f64, budget: PrivacyBudget) -> Result<f64> {
    if budget.delta <= 0.0 {
        return Err(Error::InvalidParameter(
            "the Gaussian mechanism needs delta > 0".into(),
        ));
    }
    Ok(l2_sensitivity * (2.0 * (1.25 / budget.delta).ln()).sqrt() / budget.epsilon)
}

/// `value + N(0, σ² I)` with `σ` from [`gaussian_sigma`].
pub fn gaussian_mechanism(
    value: &[f64],
    l2_sensitivity: f64,
    budget: PrivacyBudget,
    rng: &mut impl RngCore,
) -> Result<Vec<f64>> {
    let sigma = gaussian_sigma(l2_sensitivity, budget)?;
    if l2_sensitivity == 0.0 {
        return Ok(value.to_vec());
    }
    Ok(value
        .iter()
        .map(|v| v + sigma * standard_normal(rng))
        .collect())
}

/// Bins whose noisy counts cleared the release threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRelease {
    pub bins: Vec<(i64, f64)>,
    pub tau: f64,
}

/// Threshold `τ = 1 + 2 ln(1/δ)/ε`.
pub fn stable_histogram_threshold(budget: PrivacyBudget) -> f64 {
    1.0 + 2.0 * (1.0 / budget.delta).ln() / budget.epsilon
}

/// Exact per-bin counts of the non-empty bins, in ascending bin order.
pub fn bin_counts(items: &[i64]) -> BTreeMap<i64, u64> {
    let mut counts = BTreeMap::new();
    for &b in items {
        *counts.entry(b).or_insert(0) += 1;
    }
    counts
}

/// Noisy histogram over an unbounded bin domain. Each non-empty bin gets
/// `Lap(2/ε)` noise and is released only if its noisy count reaches `τ`.
pub fn stable_histogram(
    items: &[i64],
    budget: PrivacyBudget,
    rng: &mut impl RngCore,
) -> Result<HistogramRelease> {
    if items.is_empty() {
        return Err(Error::InvalidParameter(
            "stable histogram needs at least one item".into(),
        ));
    }
    if budget.delta <= 0.0 {
        return Err(Error::InvalidParameter(
            "stable histogram needs delta > 0".into(),
        ));
    }
    let tau = stable_histogram_threshold(budget);
    let scale = 2.0 / budget.epsilon;
    let bins = bin_counts(items)
        .into_iter()
        .filter_map(|(b, c)| {
            let noisy = c as f64 + laplace(rng, scale);
            (noisy >= tau).then_some((b, noisy))
        })
        .collect();
    Ok(HistogramRelease { bins, tau })
}

/// Released bin with the largest noisy count, ties to the smallest id.
pub fn argmax_released_bin(release: &HistogramRelease) -> Result<i64> {
    release
        .bins
        .iter()
        .fold(None, |best: Option<(i64, f64)>, &(b, c)| match best {
            Some((bb, bc)) if bc > c || (bc == c && bb < b) => Some((bb, bc)),
            _ => Some((b, c)),
        })
        .map(|(b, _)| b)
        .ok_or(Error::EmptyRelease)
}

/// `Σ_w max(P(w) − e^ε Q(w), 0)`: the smallest `δ` with
/// `P(E) ≤ e^ε Q(E) + δ` for every event `E`.
pub fn hockey_stick(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let e = epsilon.exp();
    p.iter().zip(q).map(|(a, b)| (a - e * b).max(0.0)).sum()
}

/// Smallest `δ` for which `P` and `Q` are `(ε, δ)`-indistinguishable in both
/// directions.
pub fn indistinguishability_delta(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    hockey_stick(p, q, epsilon).max(hockey_stick(q, p, epsilon))
}
