//! Reproducible experiment drivers and file formats behind the `mvk` binary.

pub mod commands;
pub mod config;
pub mod example1;
pub mod example2;
pub mod output;

pub use config::ExperimentConfig;
