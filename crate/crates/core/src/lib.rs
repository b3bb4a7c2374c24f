//! Differentially private mean estimation for distributions with unknown
//! covariance.
//!
//! Two estimators are provided: a restricted exponential mechanism over
//! Tukey depth wrapped in propose-test-release, and an empirically rescaled
//! Gaussian mechanism that gates on a goodness test. Both come with finite
//! grid pipelines whose preprocessing (eigenvalue and range estimation) is
//! itself private. The `audit` module checks the privacy guarantees
//! empirically on adjacent datasets.

pub mod audit;
pub mod calibrate;
pub mod dataset;
pub mod dp;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod outcome;
pub mod range_eigen;
pub mod rescaled;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tukey;

pub use dataset::Dataset;
pub use dp::{CompositionLedger, PrivacyBudget};
pub use error::{Error, Result};
pub use linalg::{PsdMatrix, Tolerances};
pub use outcome::Outcome;
