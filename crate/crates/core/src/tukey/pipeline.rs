use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dp::{CompositionLedger, PrivacyBudget};
use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::range_eigen::{private_eigenvalue, private_range};
use crate::tukey::grid::{GridSpec, DEFAULT_CELL_CAP};
use crate::tukey::ptr::{record_ptr, tukey_ptr_report, DistanceMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TukeyPipelineConfig {
    /// Constant in `α′ = c_g α √λ̂_d / d`.
    pub c_g: f64,
    pub mode: DistanceMode,
    pub cell_cap: u64,
}

impl Default for TukeyPipelineConfig {
    fn default() -> Self {
        TukeyPipelineConfig {
            c_g: 1.0,
            mode: DistanceMode::Certificate,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

/// Paired differences `u_i = (x_i − x_{i+n})/√2` with `n = ⌊len/2⌋`.
pub fn paired_differences(x: &Dataset) -> Dataset {
    let n = x.len() / 2;
    let d = x.dim();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for (a, b) in x.row(i).iter().zip(x.row(i + n)) {
            data.push((a - b) / std::f64::consts::SQRT_2);
        }
    }
    Dataset::new(d, data).expect("shape preserved")
}

/// Snaps every row to its L1-nearest grid point.
pub fn snap_dataset(x: &Dataset, grid: &GridSpec) -> Dataset {
    let mut out = x.clone();
    for i in 0..x.len() {
        let s = grid.snap(x.row(i));
        out.set_row(i, &s);
    }
    out
}

/// Grid chosen by the private preprocessing stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TukeyStageOne {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub grid: GridSpec,
}

pub fn tukey_stage_one(
    x: &Dataset,
    budget: PrivacyBudget,
    alpha: f64,
    beta: f64,
    c_g: f64,
    rng: &mut impl RngCore,
    ledger: &mut CompositionLedger,
) -> Result<TukeyStageOne> {
    let d = x.dim();
    let u = paired_differences(x);
    let l1 = private_eigenvalue(&u, 1, budget, beta, rng, ledger)?;
    let ld = private_eigenvalue(&u, d, budget, beta, rng, ledger)?;
    let range = private_range(x, 4.0 * l1.value, budget, beta, rng, ledger)?;
    let alpha_prime = c_g * alpha * ld.value.sqrt() / d as f64;
    let grid = GridSpec::new(range.radius(alpha_prime), alpha_prime, d)?;
    Ok(TukeyStageOne {
        lambda_max: l1.value,
        lambda_min: ld.value,
        grid,
    })
}

/// Finite implementation of the Tukey estimator on `x` of length `2n`:
/// private eigenvalue and range estimates pick a grid, the data is snapped,
/// and propose-test-release runs with `t = len/4`.
pub fn discrete_tukey_pipeline(
    x: &Dataset,
    budget: PrivacyBudget,
    alpha: f64,
    beta: f64,
    config: &TukeyPipelineConfig,
    rng: &mut impl RngCore,
    ledger: &mut CompositionLedger,
) -> Result<Outcome> {
    if x.dim() > 2 {
        return Err(Error::UnsupportedDimension(x.dim()));
    }
    if !(alpha > 0.0 && beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need α > 0 and β in (0, 1), got α = {alpha}, β = {beta}"
        )));
    }
    let stage = tukey_stage_one(x, budget, alpha, beta, config.c_g, rng, ledger)?;
    let snapped = snap_dataset(x, &stage.grid);
    let t = x.len() as f64 / 4.0;
    let report = tukey_ptr_report(
        &snapped,
        &stage.grid,
        budget,
        t,
        rng,
        config.mode,
        config.cell_cap,
    )?;
    record_ptr(ledger, budget);
    Ok(report.outcome)
}
