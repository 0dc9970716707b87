//! Experiment runner for decision-oriented quantization: configuration
//! files, subcommand implementations and CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::CliError;
