//! Configurable experiments on checkerboard composites, with CSV tables and SVG figures.

pub mod config;
pub mod runner;
pub mod svg;

pub use config::{ConfigError, ExperimentConfig};
pub use runner::{run, Mode, RunError};
