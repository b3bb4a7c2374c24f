//! Tukey-depth mean estimation: exact depth in one and two dimensions,
//! depth profiles over a grid, the restricted exponential mechanism and its
//! propose-test-release wrapper, and the finite pipeline.

pub mod certificate;
pub mod depth;
pub mod exact;
pub mod grid;
pub mod mechanism;
pub mod pipeline;
pub mod profile;
pub mod ptr;

pub use certificate::{certified_distance, default_gap, safety_certificate, SafetyCertificate};
pub use depth::{depth_count, expected_tukey_depth, tukey_depth};
pub use exact::{exact_unsafe_distance, ExactSafety};
pub use grid::GridSpec;
pub use mechanism::{restricted_exp_distribution, restricted_exp_mechanism};
pub use pipeline::{discrete_tukey_pipeline, TukeyPipelineConfig};
pub use profile::DepthProfile;
pub use ptr::{tukey_ptr, DistanceMode, PtrReport};
