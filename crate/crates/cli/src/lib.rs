//! Experiment runner for `redgeo`: configuration, quantity execution with
//! CSV/JSON outputs, and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod runner;

pub use config::{parse_model, ExperimentConfig, GridConfig, Quantity, RouteChoice, WeightSpec};
pub use runner::{run, ResultRecord, RunSummary};

/// Exit code for a completed run without violations.
pub const EXIT_OK: i32 = 0;
/// Exit code for an unusable configuration.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code when any invariant check or certification was flagged.
pub const EXIT_FLAGGED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Core(#[from] redgeo_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
