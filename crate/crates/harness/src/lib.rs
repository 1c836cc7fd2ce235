//! Sweep orchestration for zn-sharpening: configuration, a parallel task
//! pool over grid points and disorder realizations, resumable persistence,
//! and reduction to CSV and plot-ready data.

pub mod config;
pub mod error;
pub mod fit;
pub mod manifest;
pub mod oracle_check;
pub mod plot;
pub mod runner;
pub mod sweep;
pub mod table;

pub use config::{ExperimentConfig, Format, Mode};
pub use error::{HarnessError, Result};
pub use sweep::{resume, run_sweep, SweepOutcome};
