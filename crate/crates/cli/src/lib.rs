//! Pipeline front-end: configuration, per-stage manifests and the stages
//! themselves (clean, dedup, align-stats, benchmark, train, translate,
//! evaluate, ablate).

pub mod config;
mod error;
pub mod manifest;
pub mod stages;

pub use config::RunConfig;
pub use error::CliError;
pub use manifest::Manifest;
pub use stages::{Context, StageOutcome};
