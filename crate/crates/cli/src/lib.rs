//! Configuration, experiment drivers and CSV output for the `fracpq` binary.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
