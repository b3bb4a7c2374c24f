use serde::{Deserialize, Serialize};

use crate::dp::PrivacyBudget;
use crate::tukey::profile::DepthProfile;

/// Outcome of the volume test certifying `D_H(x, UNSAFE) > k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyCertificate {
    pub k: usize,
    pub gap: f64,
    /// `Vol(Y_{t−k−1}) / Vol(Y_{t+k+g+1})`; infinite when the denominator is empty.
    pub volume_ratio: f64,
    pub passed: bool,
}

/// Default gap `g = n/8`.
pub fn default_gap(n: usize) -> f64 {
    n as f64 / 8.0
}

/// Checks `Vol(Y_{t−k−1})/Vol(Y_{t+k+g+1}) · e^{−εg/2} ≤ δ/(4e^ε)`.
///
/// Passing certifies that every dataset within Hamming distance `k` of `x`
/// is `(ε, δ, t)`-safe. The test runs in log space; an empty upper level set
/// fails.
pub fn safety_certificate(
    profile: &DepthProfile,
    budget: PrivacyBudget,
    t: f64,
    k: usize,
    gap: f64,
) -> SafetyCertificate {
    let kf = k as f64;
    let num = profile.count_at_least(t - kf - 1.0);
    let den = profile.count_at_least(t + kf + gap + 1.0);
    let eps = budget.epsilon();
    let (volume_ratio, passed) = if den == 0.0 {
        (f64::INFINITY, false)
    } else {
        let lhs = num.ln() - den.ln() - eps * gap / 2.0;
        let rhs = budget.delta().ln() - 4f64.ln() - eps;
        (num / den, lhs <= rhs)
    };
    SafetyCertificate {
        k,
        gap,
        volume_ratio,
        passed,
    }
}

/// Certified lower bound on `D_H(x, UNSAFE)`: one more than the largest
/// `k` whose certificate passes, or zero if `k = 0` already fails.
///
/// Passing is monotone in `k`, and a neighbor of a dataset passing at `k`
/// passes at `k − 1`, so the bound has sensitivity one like the exact
/// distance.
pub fn certified_distance(
    profile: &DepthProfile,
    budget: PrivacyBudget,
    t: f64,
    gap: f64,
) -> usize {
    let mut k = 0;
    while k <= profile.n() && safety_certificate(profile, budget, t, k, gap).passed {
        k += 1;
    }
    k
}
