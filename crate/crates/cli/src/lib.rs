//! Command-line experiment runner for `widomlab`: config parsing, a
//! persistent result cache, experiment drivers and report output.

pub mod cache;
pub mod config;
pub mod descriptors;
pub mod experiments;
pub mod report;

pub use cache::{Cache, CacheKey, CACHE_ENV};
pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run, RunError};
pub use report::{ExperimentReport, Row, Target};
