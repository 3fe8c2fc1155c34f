//! Benchmark harness for bootstrapped clustering ensembles under label noise.
//!
//! A run sweeps a grid of (delta, B, repeat) cells for one learner on one
//! dataset. Every cell draws a fresh split, fits the scaler on the training
//! part, corrupts training labels only, trains, and scores train and test.
//! Results go to CSV tables and SVG line charts.

pub mod cli;
pub mod config;
pub mod plot;
pub mod report;
pub mod runner;

use std::path::Path;

pub use cli::cli_main;
pub use config::{DatasetSpec, ExperimentConfig, Learner};
pub use runner::{run_experiment, MetricKind, ResultRow};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot load dataset {path}: {source}")]
    Dataset {
        path: String,
        #[source]
        source: qbag::Error,
    },
    #[error("cell {cell} failed: {source}")]
    Cell {
        cell: String,
        #[source]
        source: qbag::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
