//! Grid execution: one cell per (delta, B, repeat).

use std::time::Instant;

use qbag::baselines::{fit_bagged_trees, predict_bagged, TreeConfig};
use qbag::clustering::{DistanceMode, QMeansConfig};
use qbag::data::{
    apply_scaler, fit_scaler, inject_label_noise, load_csv, split_indices, Dataset, Labels,
    NoiseReport, Partition, ScalerParams,
};
use qbag::ensemble::{fit_qbb, predict_batch, EnsemblePrediction, QbbConfig};
use qbag::metrics::{accuracy, mse};
use qbag::rng::{derive_seed, stream};
use qbag::{Output, Task};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Learner};
use crate::BenchError;

/// Stream indices under a cell seed.
const SPLIT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const TRAIN_EVAL_STREAM: u64 = 3;
const TEST_EVAL_STREAM: u64 = 4;
/// Learner-seed tags. The q-means family draws its bootstraps and seeding
/// from its own stream, so with Euclidean distance it is an independent run
/// of the k-means family rather than a copy of it.
const LEARNER_SEED_TAG: u64 = 2;
const QMEANS_SEED_TAG: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellId {
    pub delta_index: usize,
    pub b_index: usize,
    pub repeat: usize,
    pub delta: f64,
    pub b: usize,
    pub seed: u64,
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "delta={} B={} repeat={}",
            self.delta, self.b, self.repeat
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    Accuracy,
    Mse,
}

impl MetricKind {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Classification => MetricKind::Accuracy,
            Task::Regression => MetricKind::Mse,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Mse => "mse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub learner: String,
    pub b: usize,
    pub delta: f64,
    pub repeat_index: usize,
    pub seed: u64,
    pub train_metric: f64,
    pub test_metric: f64,
    pub metric_kind: MetricKind,
    pub mean_ensemble_variance: f64,
    pub wall_time_ms: f64,
}

/// Pipeline observations, for checks that need more than the result rows.
#[derive(Debug)]
pub enum AuditEvent<'a> {
    /// Data for one cell, after scaling and noise injection.
    CellPrepared {
        cell: &'a CellId,
        partition: &'a Partition,
        scaler: &'a ScalerParams,
        train: &'a Dataset,
        test: &'a Dataset,
        noise: Option<&'a NoiseReport>,
    },
    /// One clustering base learner of the cell's ensemble.
    LearnerFitted {
        cell: &'a CellId,
        learner_index: usize,
        mode: DistanceMode,
        inertia_history: &'a [f64],
    },
}

pub type AuditHook<'a> = &'a (dyn Fn(&AuditEvent) + Sync);

pub fn no_audit(_: &AuditEvent) {}

/// Seed of cell `(delta_index, b_index, repeat)`. It does not depend on the
/// learner, so learners compared under one master seed see the same splits
/// and the same noisy labels.
pub fn cell_seed(master: u64, delta_index: usize, b_index: usize, repeat: usize) -> u64 {
    derive_seed(master, &[delta_index as u64, b_index as u64, repeat as u64])
}

/// Worker count from `QBAG_THREADS`, or the rayon default.
pub fn thread_cap() -> Option<usize> {
    std::env::var("QBAG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset, BenchError> {
    let spec = &config.dataset;
    load_csv(&spec.path, &spec.label_column, spec.task).map_err(|source| BenchError::Dataset {
        path: spec.path.display().to_string(),
        source,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, BenchError> {
    run_experiment_audited(config, &no_audit)
}

pub fn run_experiment_audited(
    config: &ExperimentConfig,
    audit: AuditHook,
) -> Result<Vec<ResultRow>, BenchError> {
    config.validate()?;
    let data = load_dataset(config)?;
    run_on_dataset(config, &data, audit)
}

/// Run every cell of the grid on an already loaded dataset. Rows come back in
/// (delta, B, repeat) order whatever the scheduling.
pub fn run_on_dataset(
    config: &ExperimentConfig,
    data: &Dataset,
    audit: AuditHook,
) -> Result<Vec<ResultRow>, BenchError> {
    config.validate()?;
    if data.task() != config.dataset.task {
        return Err(BenchError::Config(format!(
            "dataset `{}` does not hold {} labels",
            data.name,
            match config.dataset.task {
                Task::Classification => "class",
                Task::Regression => "numeric",
            }
        )));
    }
    let mut cells = Vec::new();
    for (di, &delta) in config.delta_values.iter().enumerate() {
        for (bi, &b) in config.effective_b_values().iter().enumerate() {
            for repeat in 0..config.repeats {
                cells.push(CellId {
                    delta_index: di,
                    b_index: bi,
                    repeat,
                    delta,
                    b,
                    seed: cell_seed(config.master_seed, di, bi, repeat),
                });
            }
        }
    }
    let work = || {
        cells
            .par_iter()
            .map(|cell| run_cell(config, data, cell, audit))
            .collect::<Result<Vec<_>, _>>()
    };
    let mut rows = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    sort_rows(&mut rows);
    Ok(rows)
}

/// Canonical row order: dataset, learner, delta, B, repeat.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.dataset
            .cmp(&b.dataset)
            .then_with(|| a.learner.cmp(&b.learner))
            .then_with(|| a.delta.total_cmp(&b.delta))
            .then_with(|| a.b.cmp(&b.b))
            .then_with(|| a.repeat_index.cmp(&b.repeat_index))
    });
}

fn run_cell(
    config: &ExperimentConfig,
    data: &Dataset,
    cell: &CellId,
    audit: AuditHook,
) -> Result<ResultRow, BenchError> {
    let start = Instant::now();
    let at = |source: qbag::Error| BenchError::Cell {
        cell: cell.to_string(),
        source,
    };
    let task = config.dataset.task;
    let stratified = task == Task::Classification;
    let partition = split_indices(
        &data.labels,
        config.test_fraction,
        stratified,
        &mut stream(cell.seed, SPLIT_STREAM),
    )
    .map_err(at)?;
    let raw_train = data.subset(&partition.train);
    let scaler = fit_scaler(&raw_train);
    let mut train = apply_scaler(&scaler, &raw_train);
    let test = apply_scaler(&scaler, &data.subset(&partition.test));
    let noise = if task == Task::Classification {
        let (noisy, report) = inject_label_noise(
            &train,
            config.noise_rate,
            &mut stream(cell.seed, NOISE_STREAM),
        )
        .map_err(at)?;
        train = noisy;
        Some(report)
    } else {
        None
    };
    audit(&AuditEvent::CellPrepared {
        cell,
        partition: &partition,
        scaler: &scaler,
        train: &train,
        test: &test,
        noise: noise.as_ref(),
    });

    let tag = match config.learner {
        Learner::QmeansBagging | Learner::SingleQmeans => QMEANS_SEED_TAG,
        _ => LEARNER_SEED_TAG,
    };
    let learner_seed = derive_seed(cell.seed, &[tag]);
    let fraction = config.effective_bootstrap_fraction();
    let (train_preds, test_preds) = match config.learner.distance(config.distance) {
        Some(mode) => {
            let qbb = QbbConfig {
                n_learners: cell.b,
                bootstrap_fraction: fraction,
                qmeans: QMeansConfig {
                    k: config.k,
                    delta: cell.delta,
                    mode,
                    ..QMeansConfig::default()
                },
                task,
                seed: learner_seed,
            };
            let model = fit_qbb(&train, &qbb).map_err(at)?;
            for (i, h) in model.learners.iter().enumerate() {
                audit(&AuditEvent::LearnerFitted {
                    cell,
                    learner_index: i,
                    mode: h.mode,
                    inertia_history: &h.inertia_history,
                });
            }
            let on = |ds: &Dataset, s: u64| {
                predict_batch(&model, ds.features.view(), &mut stream(cell.seed, s))
            };
            (
                on(&train, TRAIN_EVAL_STREAM).map_err(at)?,
                on(&test, TEST_EVAL_STREAM).map_err(at)?,
            )
        }
        None => {
            let model = fit_bagged_trees(
                &train,
                cell.b,
                fraction,
                &TreeConfig::default(),
                learner_seed,
            )
            .map_err(at)?;
            let on = |ds: &Dataset| {
                ds.features
                    .rows()
                    .into_iter()
                    .map(|r| predict_bagged(&model, &r.to_vec()))
                    .collect::<qbag::Result<Vec<_>>>()
            };
            (on(&train).map_err(at)?, on(&test).map_err(at)?)
        }
    };
    let train_metric = score(&train_preds, &train.labels).map_err(at)?;
    let test_metric = score(&test_preds, &test.labels).map_err(at)?;
    let mean_ensemble_variance =
        test_preds.iter().map(|p| p.variance).sum::<f64>() / test_preds.len() as f64;
    Ok(ResultRow {
        dataset: data.name.clone(),
        learner: config.learner.name().to_string(),
        b: cell.b,
        delta: cell.delta,
        repeat_index: cell.repeat,
        seed: cell.seed,
        train_metric,
        test_metric,
        metric_kind: MetricKind::for_task(task),
        mean_ensemble_variance,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Accuracy against class labels, MSE against numeric targets.
pub fn score(preds: &[EnsemblePrediction], truth: &Labels) -> qbag::Result<f64> {
    match truth {
        Labels::Class { codes, .. } => {
            let got: Vec<usize> = preds
                .iter()
                .map(|p| p.value.as_class().unwrap_or(usize::MAX))
                .collect();
            accuracy(&got, codes)
        }
        Labels::Numeric(v) => {
            let got: Vec<f64> = preds.iter().map(|p| Output::as_f64(&p.value)).collect();
            mse(&got, v)
        }
    }
}
