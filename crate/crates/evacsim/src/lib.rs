//! Experiment harness: scenario files, parameter sweeps with seeded trial
//! batches, aggregation, and plot-ready CSV output.

pub mod cli;
pub mod config;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad config or building file; the CLI exits with code 2.
    #[error("config error: {0}")]
    Config(String),
    /// A trial failed at runtime; the CLI exits with code 3.
    #[error("trial failure: {0}")]
    Trial(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Trial(_) | HarnessError::Io(_) => 3,
        }
    }
}
