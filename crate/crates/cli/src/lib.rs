//! Experiment runner, report pipeline and artifact export for `cns-core`.

pub mod artifacts;
pub mod audit;
pub mod config;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod runner;
pub mod verify;

pub use error::{CliError, Result};
