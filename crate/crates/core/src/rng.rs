//! Seedable random streams and the few samplers every mechanism needs.
//!
//! A master seed is expanded with ChaCha20, and trial `i` reads stream `i`
//! of that key. Any single trial can be replayed without running the
//! others.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type DpRng = ChaCha20Rng;

/// Human-readable description of the seed derivation, written into result
/// file headers.
pub const SEED_DERIVATION: &str =
    "trial rng = ChaCha20Rng::seed_from_u64(master_seed) with set_stream(trial_index)";

pub fn rng_from_seed(seed: u64) -> DpRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream for trial `index` under `master`.
pub fn trial_rng(master: u64, index: u64) -> DpRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Uniform on the open interval (0, 1); never returns 0 or 1.
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box–Muller. Consumes exactly two uniforms.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Laplace with location 0 and the given scale, by inverse CDF.
pub fn laplace(rng: &mut impl RngCore, scale: f64) -> f64 {
    let u = open_unit(rng) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Standard Gumbel, for log-space categorical sampling.
pub fn gumbel(rng: &mut impl RngCore) -> f64 {
    -(-open_unit(rng).ln()).ln()
}

/// Uniform integer in `0..n`.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Fisher–Yates permutation of `0..n`.
pub fn permutation(rng: &mut impl RngCore, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Index drawn with probability proportional to `exp(log_weights[i])`.
/// Entries equal to `-inf` are never chosen. Returns `None` if all are.
pub fn gumbel_max(rng: &mut impl RngCore, log_weights: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &w) in log_weights.iter().enumerate() {
        // Draw for every entry so the stream position does not depend on weights.
        let g = gumbel(rng);
        if w == f64::NEG_INFINITY {
            continue;
        }
        let s = w + g;
        if best.is_none() || s > best_score {
            best = Some(i);
            best_score = s;
        }
    }
    best
}
