use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dp::{CompositionLedger, PrivacyBudget};
use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::rng::laplace;
use crate::tukey::certificate::{certified_distance, default_gap};
use crate::tukey::exact::ExactSafety;
use crate::tukey::grid::{GridSpec, DEFAULT_CELL_CAP};
use crate::tukey::mechanism::restricted_exp_mechanism;
use crate::tukey::profile::DepthProfile;

/// How `D_H(x, UNSAFE)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Sound lower bound from the volume certificate.
    Certificate,
    /// Brute force over grid datasets; tiny one-dimensional inputs only.
    Exact,
}

impl std::str::FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certificate" => Ok(DistanceMode::Certificate),
            "exact" => Ok(DistanceMode::Exact),
            other => Err(Error::InvalidParameter(format!(
                "unknown distance mode `{other}`"
            ))),
        }
    }
}

/// Everything the test step saw, for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtrReport {
    pub distance: usize,
    pub noise: f64,
    pub threshold: f64,
    pub outcome: Outcome,
}

/// `ln(1/(2δ))/ε`.
pub fn ptr_threshold(budget: PrivacyBudget) -> f64 {
    (1.0 / (2.0 * budget.delta())).ln() / budget.epsilon()
}

/// Probability that the noisy test fails for a dataset at distance `h`.
pub fn ptr_fail_probability(h: usize, budget: PrivacyBudget) -> f64 {
    let z = (ptr_threshold(budget) - h as f64) * budget.epsilon();
    if z < 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

/// Distance to `UNSAFE` under the requested mode.
pub fn unsafe_distance(
    x: &Dataset,
    profile: &DepthProfile,
    budget: PrivacyBudget,
    t: f64,
    mode: DistanceMode,
) -> Result<usize> {
    match mode {
        DistanceMode::Certificate => {
            Ok(certified_distance(profile, budget, t, default_gap(x.len())))
        }
        DistanceMode::Exact => ExactSafety::build(profile.grid(), x.len(), budget, t)?.distance(x),
    }
}

/// Propose-test-release around the restricted exponential mechanism.
///
/// The whole procedure is `(2ε, e^ε δ)`-differentially private.
pub fn tukey_ptr(
    x: &Dataset,
    grid: &GridSpec,
    budget: PrivacyBudget,
    t: f64,
    rng: &mut impl RngCore,
    mode: DistanceMode,
) -> Result<Outcome> {
    Ok(tukey_ptr_report(x, grid, budget, t, rng, mode, DEFAULT_CELL_CAP)?.outcome)
}

pub fn tukey_ptr_report(
    x: &Dataset,
    grid: &GridSpec,
    budget: PrivacyBudget,
    t: f64,
    rng: &mut impl RngCore,
    mode: DistanceMode,
    cell_cap: u64,
) -> Result<PtrReport> {
    // Only depths at or above t are sampled or compared exactly.
    let floor = if t > 0.0 && t.is_finite() {
        t.ceil() as u32
    } else {
        0
    };
    let profile = DepthProfile::compute_floored(x, grid, cell_cap, floor)?;
    let distance = unsafe_distance(x, &profile, budget, t, mode)?;
    let noise = laplace(rng, 1.0 / budget.epsilon());
    let threshold = ptr_threshold(budget);
    let outcome = if distance as f64 + noise < threshold {
        Outcome::fail("distance test")
    } else {
        match restricted_exp_mechanism(&profile, budget.epsilon(), t, rng) {
            Ok(y) => Outcome::Estimate(y),
            Err(Error::EmptySupport) => Outcome::fail("empty support"),
            Err(e) => return Err(e),
        }
    };
    Ok(PtrReport {
        distance,
        noise,
        threshold,
        outcome,
    })
}

/// Records the budget a PTR invocation consumes.
pub fn record_ptr(ledger: &mut CompositionLedger, budget: PrivacyBudget) {
    let eps = budget.epsilon();
    ledger.record_guarantee("tukey ptr", 2.0 * eps, eps.exp() * budget.delta());
}
