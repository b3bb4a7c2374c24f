use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{gumbel_max, uniform_index};
use crate::tukey::profile::DepthProfile;

fn first_level(profile: &DepthProfile, t: f64) -> Result<usize> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "minimum depth must be positive, got {t}"
        )));
    }
    let s = t.ceil() as usize;
    if s < profile.floor() as usize {
        return Err(Error::InvalidParameter(format!(
            "minimum depth {t} lies below the profile floor {}",
            profile.floor()
        )));
    }
    Ok(s)
}

/// `ln w_x(Y_level) = ln Σ_{q(y) ≥ level} exp(εq(y)/2)` over grid cells.
/// Returns `-inf` for an empty level set. Requires `level > 0`.
pub fn log_level_weight(profile: &DepthProfile, epsilon: f64, level: f64) -> Result<f64> {
    let s0 = first_level(profile, level)?;
    let terms: Vec<f64> = (s0..=profile.n())
        .filter_map(|s| {
            let c = profile.count_exactly(s);
            (c > 0).then(|| (c as f64).ln() + epsilon * s as f64 / 2.0)
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Samples a cell center with probability `∝ exp(εq/2)` among cells with
/// `q ≥ t`.
///
/// A depth level is drawn first by Gumbel-max over
/// `ln(#cells at level s) + εs/2`, then a cell uniformly within that level.
pub fn restricted_exp_mechanism(
    profile: &DepthProfile,
    epsilon: f64,
    t: f64,
    rng: &mut impl RngCore,
) -> Result<Vec<f64>> {
    let s0 = first_level(profile, t)?;
    let levels: Vec<usize> = (s0..=profile.n()).collect();
    let log_w: Vec<f64> = levels
        .iter()
        .map(|&s| {
            let c = profile.count_exactly(s);
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                (c as f64).ln() + epsilon * s as f64 / 2.0
            }
        })
        .collect();
    let level = levels[gumbel_max(rng, &log_w).ok_or(Error::EmptySupport)?];
    let r = uniform_index(rng, profile.count_exactly(level) as usize);
    let cell = profile
        .stored_depths()
        .iter()
        .enumerate()
        .filter(|(_, &q)| q as usize == level)
        .nth(r)
        .map(|(i, _)| i)
        .expect("level count matches stored depths");
    Ok(profile.stored_center(cell))
}

/// Exact output distribution of the restricted sampler over stored cells,
/// or `None` when no cell reaches depth `t`.
pub fn restricted_exp_distribution(
    profile: &DepthProfile,
    epsilon: f64,
    t: f64,
) -> Result<Option<Vec<f64>>> {
    let s0 = first_level(profile, t)?;
    let depths = profile.stored_depths();
    let top = match depths.iter().copied().filter(|&q| q as usize >= s0).max() {
        Some(q) => q,
        None => return Ok(None),
    };
    let mut w: Vec<f64> = depths
        .iter()
        .map(|&q| {
            if (q as usize) < s0 {
                0.0
            } else {
                (epsilon * (q as f64 - top as f64) / 2.0).exp()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(Some(w))
}
