//! Experiment runner for Kerr-nonlinear bosonic quantum neural networks.
//!
//! Parses experiment configs, runs the XOR, cat and sweep pipelines of
//! [`kerr_qnn_core`] and writes JSON/CSV artifacts. All physics lives in the
//! core crate.

pub mod bench;
pub mod config;
pub mod figure;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use run::{execute, run_to_dir, RunError};
