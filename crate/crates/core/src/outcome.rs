use serde::{Deserialize, Serialize};

/// Result of a private estimator: a failure flag or a point estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Fail { reason: String },
    Estimate(Vec<f64>),
}

impl Outcome {
    pub fn fail(reason: impl Into<String>) -> Self {
        Outcome::Fail {
            reason: reason.into(),
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail { .. })
    }

    pub fn estimate(&self) -> Option<&[f64]> {
        match self {
            Outcome::Estimate(v) => Some(v),
            Outcome::Fail { .. } => None,
        }
    }
}
