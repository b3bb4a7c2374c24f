//! Distribution functions and confidence intervals used by the mechanisms
//! and the audits.

use statrs::distribution::{Beta, ContinuousCDF};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, by bisection on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Clopper–Pearson interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let a = (1.0 - confidence) / 2.0;
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("valid beta")
            .inverse_cdf(a)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("valid beta")
            .inverse_cdf(1.0 - a)
    };
    (lo, hi)
}

/// Order-statistic confidence interval for the `q`-quantile of a sample.
/// Returns `(lo, point, hi)`; `sorted` must be ascending and nonempty.
pub fn quantile_ci(sorted: &[f64], q: f64, confidence: f64) -> (f64, f64, f64) {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let point_idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    // Normal approximation to the Binomial(n, q) rank distribution.
    let z = normal_quantile(0.5 + confidence / 2.0);
    let sd = (n as f64 * q * (1.0 - q)).sqrt();
    let lo_rank = (n as f64 * q - z * sd).floor().max(1.0) as usize;
    let hi_rank = ((n as f64 * q + z * sd).ceil() as usize + 1).min(n);
    (sorted[lo_rank - 1], sorted[point_idx], sorted[hi_rank - 1])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
