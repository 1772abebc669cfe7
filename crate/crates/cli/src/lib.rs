//! Experiment runner for the time-varying LQR tuning benchmark: method x
//! problem x seed sweeps with trajectory, regret-curve, and summary CSVs.

pub mod config;
pub mod csvio;
pub mod runner;

pub use config::{ExperimentConfig, Method};
pub use runner::{run_experiment, summarize, ExperimentReport, RunOutcome, SummaryRow};
