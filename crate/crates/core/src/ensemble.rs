//! Bagged ensembles of clustering learners.
//!
//! Learner `i` draws its own bootstrap from stream `i` of the master seed,
//! fits a delta-k++ k-means on the sampled rows and labels the clusters from
//! the sampled (possibly noisy) labels. Predictions are aggregated by
//! majority vote (ties to the smallest class code) or by averaging.

use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, modal_code, ClusterModel, QMeansConfig};
use crate::data::Dataset;
use crate::quantum::qram_bootstrap;
use crate::rng::{self, StreamRng};
use crate::{Error, Output, Result, Task};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QbbConfig {
    pub n_learners: usize,
    /// Bootstrap size `M = ceil(fraction * N)`. A fraction of exactly 1 uses
    /// the full training set in order instead of resampling.
    pub bootstrap_fraction: f64,
    pub qmeans: QMeansConfig,
    pub task: Task,
    pub seed: u64,
}

impl QbbConfig {
    pub fn new(task: Task, qmeans: QMeansConfig) -> Self {
        QbbConfig {
            n_learners: 8,
            bootstrap_fraction: 0.5,
            qmeans,
            task,
            seed: 0,
        }
    }
}

pub(crate) fn validate_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "bootstrap fraction {fraction} outside (0, 1]"
        )))
    }
}

pub fn bootstrap_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Training rows for one learner, drawn from `rng`.
pub fn learner_sample(n: usize, fraction: f64, rng: &mut StreamRng) -> Result<Vec<usize>> {
    if fraction >= 1.0 {
        return Ok((0..n).collect());
    }
    Ok(qram_bootstrap(n, bootstrap_size(n, fraction), rng)?.indices)
}

/// Random stream of learner `index` under `seed`.
pub fn learner_stream(seed: u64, index: usize) -> StreamRng {
    rng::stream(seed, index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QbbModel {
    pub learners: Vec<ClusterModel>,
    pub task: Task,
    pub config: QbbConfig,
}

impl QbbModel {
    pub fn dim(&self) -> usize {
        self.learners[0].dim()
    }
}

/// Fit one base learner on `train` using `stream` for both the bootstrap
/// draw and the k-means seeding.
pub fn fit_learner(
    train: &Dataset,
    qmeans: &QMeansConfig,
    fraction: f64,
    stream: &mut StreamRng,
) -> Result<ClusterModel> {
    let rows = learner_sample(train.n_samples(), fraction, stream)?;
    let sample = train.subset(&rows);
    let fit = clustering::fit_qmeans(sample.features.view(), qmeans, stream)?;
    clustering::label_clusters(fit.model, &sample.labels, &fit.assignment)
}

pub fn fit_qbb(train: &Dataset, config: &QbbConfig) -> Result<QbbModel> {
    if config.n_learners == 0 {
        return Err(Error::InvalidParameter("need at least one learner".into()));
    }
    validate_fraction(config.bootstrap_fraction)?;
    config.qmeans.validate()?;
    if train.task() != config.task {
        return Err(Error::UnsupportedTask {
            expected: match config.task {
                Task::Classification => "class",
                Task::Regression => "numeric",
            },
        });
    }
    let m = if config.bootstrap_fraction >= 1.0 {
        train.n_samples()
    } else {
        bootstrap_size(train.n_samples(), config.bootstrap_fraction)
    };
    if m < config.qmeans.k {
        return Err(Error::TooFewSamples {
            k: config.qmeans.k,
            n: m,
        });
    }
    let learners = (0..config.n_learners)
        .into_par_iter()
        .map(|i| {
            let mut stream = learner_stream(config.seed, i);
            fit_learner(
                train,
                &config.qmeans,
                config.bootstrap_fraction,
                &mut stream,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QbbModel {
        learners,
        task: config.task,
        config: *config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub value: Output,
    pub per_learner: Vec<Output>,
    /// Regression: `(1/B) sum (h_i - mean)^2`. Classification: vote
    /// disagreement rate, `1 - (modal votes / B)`.
    pub variance: f64,
}

/// Most frequent code, ties to the smallest.
pub fn majority_vote(votes: &[usize]) -> usize {
    let max = votes.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &v in votes {
        counts[v] += 1;
    }
    modal_code(&counts)
}

/// Sums run over the values in sorted order, so the result does not depend
/// on learner order.
fn ordered_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

/// Population variance `(1/B) sum (h_i - mean)^2`.
pub fn prediction_variance(values: &[f64]) -> f64 {
    let mean = ordered_mean(values);
    let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    ordered_mean(&squares)
}

/// Fraction of votes that disagree with the winning class.
pub fn disagreement_rate(votes: &[usize], winner: usize) -> f64 {
    let agree = votes.iter().filter(|&&v| v == winner).count();
    1.0 - agree as f64 / votes.len() as f64
}

pub fn aggregate(task: Task, per_learner: Vec<Output>) -> Result<EnsemblePrediction> {
    if per_learner.is_empty() {
        return Err(Error::EmptyInput);
    }
    match task {
        Task::Classification => {
            let votes: Vec<usize> = per_learner
                .iter()
                .map(|o| {
                    o.as_class()
                        .ok_or(Error::UnsupportedTask { expected: "class" })
                })
                .collect::<Result<_>>()?;
            let winner = majority_vote(&votes);
            Ok(EnsemblePrediction {
                value: Output::Class(winner),
                variance: disagreement_rate(&votes, winner),
                per_learner,
            })
        }
        Task::Regression => {
            let values: Vec<f64> = per_learner.iter().map(Output::as_f64).collect();
            Ok(EnsemblePrediction {
                value: Output::Numeric(ordered_mean(&values)),
                variance: prediction_variance(&values),
                per_learner,
            })
        }
    }
}

pub fn predict_one<R: Rng + ?Sized>(
    model: &QbbModel,
    x: &[f64],
    rng: &mut R,
) -> Result<EnsemblePrediction> {
    let outputs = model
        .learners
        .iter()
        .map(|h| clustering::predict(h, x, rng))
        .collect::<Result<Vec<_>>>()?;
    aggregate(model.task, outputs)
}

/// Row-wise [`predict_one`]. Row `i` uses its own stream of a seed drawn once
/// from `rng`, so shot-sampled batches are independent of evaluation order.
pub fn predict_batch<R: Rng + ?Sized>(
    model: &QbbModel,
    x: ArrayView2<f64>,
    rng: &mut R,
) -> Result<Vec<EnsemblePrediction>> {
    if x.nrows() > 0 && x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.ncols(),
        });
    }
    let base: u64 = rng.random();
    (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(base, i as u64);
            predict_one(model, &x.row(i).to_vec(), &mut r)
        })
        .collect()
}

/// Mean test-set ensemble variance for each ensemble size, averaged over
/// `repeats` independently seeded fits. Repeat `r` uses the same learner
/// streams for every `B`, so smaller ensembles are prefixes of larger ones.
pub fn ensemble_variance_profile(
    train: &Dataset,
    test: &Dataset,
    base: &QbbConfig,
    b_values: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if b_values.is_empty() || b_values.contains(&0) {
        return Err(Error::InvalidParameter(
            "ensemble sizes must be non-empty and >= 1".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    let max_b = *b_values.iter().max().expect("non-empty");
    let mut totals = vec![0.0; b_values.len()];
    for r in 0..repeats {
        let config = QbbConfig {
            n_learners: max_b,
            seed: rng::derive_seed(seed, &[r as u64]),
            ..*base
        };
        let full = fit_qbb(train, &config)?;
        for (total, &b) in totals.iter_mut().zip(b_values) {
            let model = QbbModel {
                learners: full.learners[..b].to_vec(),
                task: full.task,
                config: QbbConfig {
                    n_learners: b,
                    ..config
                },
            };
            let preds = predict_batch(&model, test.features.view(), &mut rng::seeded(config.seed))?;
            *total += preds.iter().map(|p| p.variance).sum::<f64>() / preds.len() as f64;
        }
    }
    Ok(b_values
        .iter()
        .zip(totals)
        .map(|(&b, t)| (b, t / repeats as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::DistanceMode;
    use crate::data::{synthesize_blobs, synthesize_regression_blobs};
    use crate::rng::seeded;

    fn euclid(k: usize) -> QMeansConfig {
        QMeansConfig {
            k,
            delta: 0.2,
            mode: DistanceMode::Euclidean,
            ..QMeansConfig::default()
        }
    }

    #[test]
    fn vote_majority_and_tie() {
        assert_eq!(majority_vote(&[1, 1, 0]), 1);
        assert_eq!(majority_vote(&[0, 1]), 0);
        assert_eq!(majority_vote(&[2, 1, 2, 1]), 1);
    }

    #[test]
    fn regression_aggregate_substitution() {
        let p = aggregate(
            Task::Regression,
            vec![
                Output::Numeric(1.0),
                Output::Numeric(1.0),
                Output::Numeric(3.0),
            ],
        )
        .unwrap();
        assert_eq!(p.value, Output::Numeric(5.0 / 3.0));
        assert!((p.variance - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn classification_variance_is_disagreement() {
        let p = aggregate(
            Task::Classification,
            vec![
                Output::Class(1),
                Output::Class(1),
                Output::Class(0),
                Output::Class(2),
            ],
        )
        .unwrap();
        assert_eq!(p.value, Output::Class(1));
        assert!((p.variance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_sizes() {
        assert_eq!(bootstrap_size(120, 0.5), 60);
        assert_eq!(bootstrap_size(455, 0.5), 228);
        assert_eq!(bootstrap_size(3, 0.01), 1);
    }

    #[test]
    fn too_small_bootstrap_is_rejected() {
        let b = synthesize_blobs(5, 2, 2, 1.0, &mut seeded(0)).unwrap();
        let cfg = QbbConfig {
            bootstrap_fraction: 0.2,
            ..QbbConfig::new(Task::Classification, euclid(3))
        };
        assert!(matches!(
            fit_qbb(&b.dataset, &cfg),
            Err(Error::TooFewSamples { k: 3, n: 2 })
        ));
    }

    #[test]
    fn task_mismatch_is_rejected() {
        let b = synthesize_blobs(10, 2, 2, 1.0, &mut seeded(0)).unwrap();
        let cfg = QbbConfig::new(Task::Regression, euclid(2));
        assert!(fit_qbb(&b.dataset, &cfg).is_err());
    }

    #[test]
    fn eight_learners_on_half_samples() {
        let b = synthesize_blobs(25, 4, 3, 1.0, &mut seeded(1)).unwrap();
        let cfg = QbbConfig {
            n_learners: 8,
            seed: 5,
            ..QbbConfig::new(Task::Classification, euclid(10))
        };
        let model = fit_qbb(&b.dataset, &cfg).unwrap();
        assert_eq!(model.learners.len(), 8);
        let m = bootstrap_size(75, 0.5);
        assert_eq!(m, 38);
        let mut stream = learner_stream(5, 3);
        assert_eq!(learner_sample(75, 0.5, &mut stream).unwrap().len(), 38);
    }

    #[test]
    fn single_learner_ensemble_matches_its_learner() {
        let b = synthesize_blobs(20, 3, 3, 2.0, &mut seeded(2)).unwrap();
        let cfg = QbbConfig {
            n_learners: 1,
            seed: 9,
            ..QbbConfig::new(Task::Classification, euclid(4))
        };
        let model = fit_qbb(&b.dataset, &cfg).unwrap();
        for row in b.dataset.features.rows() {
            let x = row.to_vec();
            let p = predict_one(&model, &x, &mut seeded(0)).unwrap();
            assert_eq!(
                p.value,
                clustering::predict(&model.learners[0], &x, &mut seeded(0)).unwrap()
            );
            assert_eq!(p.variance, 0.0);
        }
    }

    #[test]
    fn full_fraction_single_learner_equals_direct_fit() {
        let b = synthesize_regression_blobs(15, 2, 3, 1.0, 2.0, &mut seeded(4)).unwrap();
        let q = euclid(5);
        let cfg = QbbConfig {
            n_learners: 1,
            bootstrap_fraction: 1.0,
            seed: 21,
            ..QbbConfig::new(Task::Regression, q)
        };
        let model = fit_qbb(&b.dataset, &cfg).unwrap();
        let mut stream = learner_stream(21, 0);
        let fit = clustering::fit_qmeans(b.dataset.features.view(), &q, &mut stream).unwrap();
        let direct =
            clustering::label_clusters(fit.model, &b.dataset.labels, &fit.assignment).unwrap();
        assert_eq!(model.learners[0], direct);
    }

    #[test]
    fn fit_is_deterministic() {
        let b = synthesize_blobs(20, 3, 3, 2.0, &mut seeded(3)).unwrap();
        for mode in [DistanceMode::Euclidean, DistanceMode::FidelityExact] {
            let q = QMeansConfig { mode, ..euclid(4) };
            let cfg = QbbConfig {
                n_learners: 6,
                seed: 77,
                ..QbbConfig::new(Task::Classification, q)
            };
            assert_eq!(
                fit_qbb(&b.dataset, &cfg).unwrap(),
                fit_qbb(&b.dataset, &cfg).unwrap()
            );
        }
    }

    #[test]
    fn batch_matches_rowwise_and_handles_empty() {
        let b = synthesize_blobs(15, 2, 3, 1.5, &mut seeded(6)).unwrap();
        let cfg = QbbConfig {
            n_learners: 5,
            seed: 1,
            ..QbbConfig::new(Task::Classification, euclid(4))
        };
        let model = fit_qbb(&b.dataset, &cfg).unwrap();
        let batch = predict_batch(&model, b.dataset.features.view(), &mut seeded(0)).unwrap();
        assert_eq!(batch.len(), 45);
        for (row, p) in b.dataset.features.rows().into_iter().zip(&batch) {
            assert_eq!(
                &predict_one(&model, &row.to_vec(), &mut seeded(0)).unwrap(),
                p
            );
        }
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(predict_batch(&model, empty.view(), &mut seeded(0))
            .unwrap()
            .is_empty());
        let wrong = ndarray::Array2::<f64>::zeros((2, 3));
        assert!(predict_batch(&model, wrong.view(), &mut seeded(0)).is_err());
    }

    #[test]
    fn variance_profile_degenerate_cases() {
        let b = synthesize_regression_blobs(20, 2, 3, 0.0, 0.0, &mut seeded(8)).unwrap();
        let base = QbbConfig::new(Task::Regression, euclid(3));
        let profile =
            ensemble_variance_profile(&b.dataset, &b.dataset, &base, &[1, 4, 8], 2, 3).unwrap();
        assert_eq!(profile.len(), 3);
        assert_eq!(profile[0], (1, 0.0));
        // Zero-spread blobs with constant blob targets: every learner agrees.
        for &(_, v) in &profile {
            assert!(v < 1e-20, "{profile:?}");
        }
    }
}
