//! Explicit coarse embeddings of finite metric spaces into `l_p`.
//!
//! The pipeline: factor a positive-definite kernel into unit vectors of
//! `l_2` ([`kernel_sphere_maps`]), move them to any `l_p` sphere with the
//! Mazur map ([`mazur`]), calibrate one such map per level, and stack the
//! basepoint-shifted levels into a `p`-direct sum ([`coarse_embedder`]).
//! [`distortion_report`] checks the result against its compression and
//! expansion envelopes.

pub mod coarse_embedder;
pub mod distortion_report;
pub mod error;
pub mod kernel_sphere_maps;
pub mod lp_core;
pub mod mazur;
pub mod metric_spaces;

pub use coarse_embedder::{build_embedding, CoarseEmbedding, EmbeddingConfig, Envelope, LevelSchedule};
pub use distortion_report::{
    empirical_profile, export, verify_bounds, Bucket, DistortionProfile, ExportFormat, Side, Verification,
    Violation,
};
pub use error::{Error, Result};
pub use kernel_sphere_maps::{
    build_family, build_sphere_map, calibrate_level, measure_conditions, Conditions, KernelKind, SphereMapFamily,
    SphereMapLevel,
};
pub use lp_core::{direct_sum, distance_p, norm_p, normalize, BlockVector, LpVector, PExponent};
pub use mazur::{check_estimates, mazur_bounds, mazur_map, transport_conditions, MazurBounds, MazurCheck};
pub use metric_spaces::{generate, validate, FiniteMetricSpace, SpaceKind, ValidationReport};
