//! Experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qbag::clustering::DistanceMode;
use qbag::Task;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Learner {
    QmeansBagging,
    KmeansBagging,
    DtBagging,
    SingleQmeans,
    SingleKmeans,
}

impl Learner {
    pub const ALL: [Learner; 5] = [
        Learner::QmeansBagging,
        Learner::KmeansBagging,
        Learner::DtBagging,
        Learner::SingleQmeans,
        Learner::SingleKmeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Learner::QmeansBagging => "qmeans_bagging",
            Learner::KmeansBagging => "kmeans_bagging",
            Learner::DtBagging => "dt_bagging",
            Learner::SingleQmeans => "single_qmeans",
            Learner::SingleKmeans => "single_kmeans",
        }
    }

    /// Single learners ignore the B grid and train once on the full training set.
    pub fn is_single(self) -> bool {
        matches!(self, Learner::SingleQmeans | Learner::SingleKmeans)
    }

    /// Distance used by the clustering learners; `None` for trees.
    pub fn distance(self, configured: DistanceMode) -> Option<DistanceMode> {
        match self {
            Learner::QmeansBagging | Learner::SingleQmeans => Some(configured),
            Learner::KmeansBagging | Learner::SingleKmeans => Some(DistanceMode::Euclidean),
            Learner::DtBagging => None,
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Learner {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Learner::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown learner `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub label_column: String,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub learner: Learner,
    pub b_values: Vec<usize>,
    pub delta_values: Vec<f64>,
    pub k: usize,
    /// Fraction of training labels flipped; classification only.
    pub noise_rate: f64,
    pub repeats: usize,
    pub test_fraction: f64,
    pub distance: DistanceMode,
    pub bootstrap_fraction: f64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults follow the noisy-classification protocol: k = 10, 5% noise,
    /// five repeats, 20% test split, half-size bootstraps.
    pub fn new(dataset: DatasetSpec, learner: Learner) -> Self {
        ExperimentConfig {
            dataset,
            learner,
            b_values: (4..=32).step_by(4).collect(),
            delta_values: vec![0.1, 0.2, 0.3, 0.4],
            k: 10,
            noise_rate: 0.05,
            repeats: 5,
            test_fraction: 0.2,
            distance: DistanceMode::FidelityExact,
            bootstrap_fraction: 0.5,
            master_seed: 42,
            output_dir: PathBuf::from("out"),
        }
    }

    /// The B grid actually run: `[1]` for single learners.
    pub fn effective_b_values(&self) -> Vec<usize> {
        if self.learner.is_single() {
            vec![1]
        } else {
            self.b_values.clone()
        }
    }

    /// Single learners see every training row once.
    pub fn effective_bootstrap_fraction(&self) -> f64 {
        if self.learner.is_single() {
            1.0
        } else {
            self.bootstrap_fraction
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.b_values.is_empty() || self.b_values.contains(&0) {
            return bad("B values must be a nonempty list of positive counts".into());
        }
        if self.delta_values.is_empty() {
            return bad("delta values must be nonempty".into());
        }
        if let Some(d) = self
            .delta_values
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return bad(format!("delta {d} must be a positive finite number"));
        }
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return bad(format!("noise rate {} outside [0, 1)", self.noise_rate));
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test fraction {} outside (0, 1)",
                self.test_fraction
            ));
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return bad(format!(
                "bootstrap fraction {} outside (0, 1]",
                self.bootstrap_fraction
            ));
        }
        if let DistanceMode::FidelityShots(0) = self.distance {
            return bad("shot count must be >= 1".into());
        }
        if self.dataset.task == Task::Regression && self.noise_rate > 0.0 {
            return bad("label noise applies to classification only; use --noise 0".into());
        }
        Ok(())
    }
}
