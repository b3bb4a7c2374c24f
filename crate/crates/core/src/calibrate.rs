//! Sweeps for the constants the analysis leaves unspecified.

use serde::{Deserialize, Serialize};

use crate::dp::{argmax_released_bin, stable_histogram, PrivacyBudget};
use crate::experiment::{run_trial, Mechanism, TrialSpec};
use crate::linalg::PsdMatrix;
use crate::rescaled::{goodness_check, lambda_with_constant, TripleDataset};
use crate::rng::{open_unit, trial_rng};
use crate::synth::{synthesize, Family, SynthSpec};
use crate::tukey::ptr::DistanceMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub constant: f64,
    pub successes: u64,
    pub trials: u64,
}

impl CalibrationPoint {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }
}

/// How often `3n` standard Gaussian points in `R^d` are λ-good with
/// `λ = c_λ d ln(3n/β)`.
pub fn goodness_rate(
    c_lambda: f64,
    n: usize,
    d: usize,
    beta: f64,
    trials: u64,
    seed: u64,
) -> CalibrationPoint {
    let spec = SynthSpec::new(
        Family::Gaussian,
        vec![0.0; d],
        PsdMatrix::identity(d),
        3 * n,
    )
    .expect("matching shapes");
    let lambda = lambda_with_constant(c_lambda, n as f64, d, beta);
    let successes = (0..trials)
        .filter(|&t| {
            let x = synthesize(&spec, &mut trial_rng(seed, t));
            goodness_check(&TripleDataset::new(x).expect("3n points"), lambda).good
        })
        .count() as u64;
    CalibrationPoint {
        constant: c_lambda,
        successes,
        trials,
    }
}

/// How often the stable histogram's modal bin lands within one of the true
/// mode `b = 0` when `n = ⌈(C/ε) ln(1/(βδ))⌉` items put 97% of their mass
/// on bins `{−1, 0, 1}` (centre-heavy) and spread the rest over `2..=20`.
pub fn stable_histogram_rate(
    c: f64,
    budget: PrivacyBudget,
    beta: f64,
    trials: u64,
    seed: u64,
) -> CalibrationPoint {
    let n = (c / budget.epsilon() * (1.0 / (beta * budget.delta())).ln()).ceil() as usize;
    let successes = (0..trials)
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let items: Vec<i64> = (0..n)
                .map(|_| {
                    let u = open_unit(&mut rng);
                    if u < 0.97 {
                        // 0.25 / 0.5 / 0.25 split of the concentrated mass.
                        let v = u / 0.97;
                        if v < 0.25 {
                            -1
                        } else if v < 0.75 {
                            0
                        } else {
                            1
                        }
                    } else {
                        2 + ((u - 0.97) / 0.03 * 19.0) as i64
                    }
                })
                .collect();
            stable_histogram(&items, budget, &mut rng)
                .ok()
                .and_then(|r| argmax_released_bin(&r).ok())
                .is_some_and(|b| (-1..=1).contains(&b))
        })
        .count() as u64;
    CalibrationPoint {
        constant: c,
        successes,
        trials,
    }
}

/// Tukey pipeline success rate (non-FAIL with error at most `α`) as a
/// function of the grid constant `c_g`.
#[allow(clippy::too_many_arguments)]
pub fn grid_constant_rate(
    c_g: f64,
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    alpha: f64,
    beta: f64,
    trials: u64,
    seed: u64,
) -> CalibrationPoint {
    let spec = TrialSpec {
        mechanism: Mechanism::Tukey,
        family: Family::Gaussian,
        n,
        d,
        eps: budget.epsilon(),
        delta: budget.delta(),
        alpha,
        beta,
        mean: 0.0,
        sigma_diag: vec![1.0; d],
        mode: DistanceMode::Certificate,
        c_g,
        c_lambda: crate::rescaled::C_LAMBDA,
        finite: true,
    };
    let successes = (0..trials)
        .filter(|&t| {
            run_trial(&spec, seed, t, false)
                .ok()
                .and_then(|r| r.mahalanobis_error)
                .is_some_and(|e| e <= alpha)
        })
        .count() as u64;
    CalibrationPoint {
        constant: c_g,
        successes,
        trials,
    }
}
