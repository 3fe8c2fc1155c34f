//! Bootstrapped bagging with unsupervised clustering base learners.
//!
//! Each base learner is a delta-k++ seeded k-means clusterer whose
//! point-to-centroid distance is either squared Euclidean or the SWAP-test
//! fidelity distance `1 - |<x|c>|^2` between amplitude-encoded vectors.
//! Clusters are turned into predictors by labelling them with the (possibly
//! noisy) majority class or mean target of their training members, and the
//! ensemble aggregates learners by majority vote or averaging.
//!
//! Module map:
//! - [`data`]: datasets, CSV ingestion, splitting, scaling, label noise.
//! - [`quantum`]: statevector SWAP test, amplitude encoding, QRAM-style sampling.
//! - [`clustering`]: delta-k++ seeding, Lloyd iterations, cluster labelling.
//! - [`ensemble`]: bagged ensembles of clustering learners and aggregation.
//! - [`baselines`]: CART decision trees and bagged trees.
//! - [`metrics`]: accuracy, MSE and repeat summaries.
//! - [`persist`]: versioned text serialization of trained models.

pub mod baselines;
pub mod clustering;
pub mod data;
pub mod ensemble;
mod error;
pub mod metrics;
pub mod persist;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};

/// Output of a single hypothesis or of an aggregated ensemble.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Output {
    Class(usize),
    Numeric(f64),
}

impl Output {
    pub fn as_class(&self) -> Option<usize> {
        match *self {
            Output::Class(c) => Some(c),
            Output::Numeric(_) => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Output::Class(c) => c as f64,
            Output::Numeric(v) => v,
        }
    }
}

/// Learning task, determined by the label type of the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Task {
    Classification,
    Regression,
}
