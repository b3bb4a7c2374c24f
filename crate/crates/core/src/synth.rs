//! Synthetic data: `x = μ + Σ^{1/2} w` for a standardized noise vector `w`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, PsdMatrix};
use crate::rng::{open_unit, standard_normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    /// Independent uniform coordinates on `[−√3, √3]`.
    ScaledUniform,
    /// Independent `±1` coordinates.
    RademacherMixture,
}

impl Family {
    /// Subgaussian constant `c` such that the family is subgaussian with
    /// parameter `cΣ`. All three standardized coordinate laws have
    /// `E e^{λw} ≤ e^{λ²/2}`, so `c = 1`.
    pub fn subgaussian_constant(self) -> f64 {
        1.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::ScaledUniform => "scaled_uniform",
            Family::RademacherMixture => "rademacher_mixture",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "scaled_uniform" => Ok(Family::ScaledUniform),
            "rademacher_mixture" | "rademacher" => Ok(Family::RademacherMixture),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub family: Family,
    pub mu: Vec<f64>,
    pub sigma: PsdMatrix,
    pub n: usize,
}

impl SynthSpec {
    pub fn new(family: Family, mu: Vec<f64>, sigma: PsdMatrix, n: usize) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(Error::BadShape(format!(
                "mean of length {} against {}x{} covariance",
                mu.len(),
                sigma.dim(),
                sigma.dim()
            )));
        }
        Ok(SynthSpec {
            family,
            mu,
            sigma,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

fn coordinate(family: Family, rng: &mut impl RngCore) -> f64 {
    match family {
        Family::Gaussian => standard_normal(rng),
        Family::ScaledUniform => 3f64.sqrt() * (2.0 * open_unit(rng) - 1.0),
        Family::RademacherMixture => {
            if rng.next_u64() >> 63 == 0 {
                -1.0
            } else {
                1.0
            }
        }
    }
}

/// `n` independent draws.
pub fn synthesize(spec: &SynthSpec, rng: &mut impl RngCore) -> Dataset {
    let d = spec.dim();
    let root = spec.sigma.sqrt();
    let mut data = Vec::with_capacity(spec.n * d);
    let mut w = vec![0.0; d];
    for _ in 0..spec.n {
        for v in w.iter_mut() {
            *v = coordinate(spec.family, rng);
        }
        let y = mat_vec(&root, &w);
        data.extend(y.iter().zip(&spec.mu).map(|(a, m)| a + m));
    }
    Dataset::new(d, data).expect("dimension is positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn rademacher_values() {
        let spec = SynthSpec::new(
            Family::RademacherMixture,
            vec![0.0],
            PsdMatrix::identity(1),
            1000,
        )
        .unwrap();
        let x = synthesize(&spec, &mut rng_from_seed(3));
        assert!(x.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
        let ones = x.as_slice().iter().filter(|&&v| v == 1.0).count();
        assert!((400..600).contains(&ones));
    }

    #[test]
    fn family_names_round_trip() {
        for f in [
            Family::Gaussian,
            Family::ScaledUniform,
            Family::RademacherMixture,
        ] {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
    }
}
