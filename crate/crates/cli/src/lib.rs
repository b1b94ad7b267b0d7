//! Experiment runner for current-mirror distortion and mismatch studies.

pub mod config;
pub mod experiments;
pub mod report;
pub mod sim;

pub use config::{Experiment, ExperimentConfig, RawOptions};
pub use experiments::{run, run_all, ExperimentReport};
