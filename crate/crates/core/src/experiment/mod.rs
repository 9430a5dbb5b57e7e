//! Config-driven pipelines: generate data, solve, train, bootstrap, compare.
//!
//! Every stage reads from and writes to one directory, so stages can be run
//! separately or chained by [`cmd_reproduce`].

mod config;
pub mod output;
mod stages;

pub use config::{ExperimentConfig, Preset};
pub use stages::*;
