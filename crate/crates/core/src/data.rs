//! Datasets, CSV ingestion, splitting, feature scaling and label noise.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Task};

/// Labels of a dataset: contiguous class codes or real targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    Class {
        codes: Vec<usize>,
        /// Number of possible classes, `C >= 2`. Codes lie in `0..n_classes`.
        n_classes: usize,
    },
    Numeric(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Class { codes, .. } => codes.len(),
            Labels::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Labels::Class { .. } => Task::Classification,
            Labels::Numeric(_) => Task::Regression,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Labels {
        match self {
            Labels::Class { codes, n_classes } => Labels::Class {
                codes: indices.iter().map(|&i| codes[i]).collect(),
                n_classes: *n_classes,
            },
            Labels::Numeric(v) => Labels::Numeric(indices.iter().map(|&i| v[i]).collect()),
        }
    }

    pub fn output(&self, i: usize) -> crate::Output {
        match self {
            Labels::Class { codes, .. } => crate::Output::Class(codes[i]),
            Labels::Numeric(v) => crate::Output::Numeric(v[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// One row per sample.
    pub features: Array2<f64>,
    pub labels: Labels,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Labels,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.nrows() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::LengthMismatch {
                left: features.ncols(),
                right: feature_names.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        match &labels {
            Labels::Class { codes, n_classes } => {
                if *n_classes < 2 {
                    return Err(Error::TooFewClasses(*n_classes));
                }
                if let Some(&bad) = codes.iter().find(|&&c| c >= *n_classes) {
                    return Err(Error::InvalidParameter(format!(
                        "class code {bad} out of range for {n_classes} classes"
                    )));
                }
            }
            Labels::Numeric(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("targets"));
                }
            }
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn task(&self) -> Task {
        self.labels.task()
    }

    /// Rows `indices` (in the given order, repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select(Axis(0), indices),
            labels: self.labels.select(indices),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn with_labels(&self, labels: Labels) -> Result<Dataset> {
        Dataset::new(
            self.name.clone(),
            self.features.clone(),
            labels,
            self.feature_names.clone(),
        )
    }
}

/// Load a headered, comma-separated numeric table. Every column other than
/// `label_column` becomes a feature. Class labels are re-encoded to
/// `0..C` following the sorted order of their original values.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: label_column.to_string(),
        })?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row: row + 1,
                column: header.get(j).cloned().unwrap_or_default(),
                value: cell.to_string(),
            })?;
            if j == label_idx {
                raw_labels.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = raw_labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let features =
        Array2::from_shape_vec((n, feature_names.len()), values).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let labels = match task {
        Task::Classification => encode_classes(&raw_labels)?.0,
        Task::Regression => Labels::Numeric(raw_labels),
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, features, labels, feature_names)
}

/// Map raw class values to contiguous codes. Returns the labels and the
/// sorted original values, so `originals[code]` inverts the encoding.
pub fn encode_classes(raw: &[f64]) -> Result<(Labels, Vec<f64>)> {
    let mut originals: Vec<f64> = raw.to_vec();
    if originals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("labels"));
    }
    originals.sort_by(f64::total_cmp);
    originals.dedup();
    if originals.len() < 2 {
        return Err(Error::TooFewClasses(originals.len()));
    }
    let codes = raw
        .iter()
        .map(|v| originals.binary_search_by(|o| o.total_cmp(v)).unwrap())
        .collect();
    Ok((
        Labels::Class {
            codes,
            n_classes: originals.len(),
        },
        originals,
    ))
}

/// Sorted train/test index partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices<R: Rng + ?Sized>(
    labels: &Labels,
    test_fraction: f64,
    stratified: bool,
    rng: &mut R,
) -> Result<Partition> {
    let n = labels.len();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut test = Vec::new();
    match (stratified, labels) {
        (true, Labels::Class { codes, n_classes }) => {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); *n_classes];
            for (i, &c) in codes.iter().enumerate() {
                by_class[c].push(i);
            }
            for mut members in by_class {
                let take = (test_fraction * members.len() as f64).round() as usize;
                members.shuffle(rng);
                test.extend_from_slice(&members[..take]);
            }
        }
        (true, Labels::Numeric(_)) => {
            return Err(Error::UnsupportedTask {
                expected: "class (stratified split)",
            })
        }
        (false, _) => {
            let take = (test_fraction * n as f64).round() as usize;
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(rng);
            test.extend_from_slice(&all[..take.min(n)]);
        }
    }
    if test.is_empty() || test.len() == n {
        return Err(Error::EmptyPartition {
            fraction: test_fraction,
            n,
        });
    }
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    Ok(Partition { train, test })
}

pub fn train_test_split<R: Rng + ?Sized>(
    ds: &Dataset,
    test_fraction: f64,
    stratified: bool,
    rng: &mut R,
) -> Result<(Dataset, Dataset)> {
    let part = split_indices(&ds.labels, test_fraction, stratified, rng)?;
    Ok((ds.subset(&part.train), ds.subset(&part.test)))
}

/// Per-feature standardization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation; zero-variance features store 1.
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn transform(&self, features: &Array2<f64>) -> Array2<f64> {
        let mean = Array1::from(self.mean.clone());
        let std = Array1::from(self.std.clone());
        (features - &mean) / &std
    }

    pub fn inverse_transform(&self, features: &Array2<f64>) -> Array2<f64> {
        let mean = Array1::from(self.mean.clone());
        let std = Array1::from(self.std.clone());
        features * &std + &mean
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

pub fn fit_scaler(train: &Dataset) -> ScalerParams {
    let n = train.n_samples() as f64;
    let mut mean = Vec::with_capacity(train.n_features());
    let mut std = Vec::with_capacity(train.n_features());
    for col in train.features.columns() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        mean.push(m);
        // Constant columns map to zero instead of dividing by zero.
        std.push(if s > 1e-12 * m.abs().max(1.0) { s } else { 1.0 });
    }
    ScalerParams { mean, std }
}

pub fn apply_scaler(params: &ScalerParams, ds: &Dataset) -> Dataset {
    Dataset {
        name: ds.name.clone(),
        features: params.transform(&ds.features),
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub rate: f64,
    /// Sorted, distinct.
    pub flipped_indices: Vec<usize>,
}

/// Number of labels corrupted at `rate` over `n` samples, `floor(rate * n)`.
/// The small epsilon keeps products such as `0.29 * 100` from rounding down.
pub fn noise_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64) + 1e-9).floor() as usize
}

/// Replace exactly `floor(rate * N)` labels, chosen uniformly without
/// replacement, each by a uniformly drawn different class.
pub fn inject_label_noise<R: Rng + ?Sized>(
    ds: &Dataset,
    rate: f64,
    rng: &mut R,
) -> Result<(Dataset, NoiseReport)> {
    let Labels::Class { codes, n_classes } = &ds.labels else {
        return Err(Error::UnsupportedTask { expected: "class" });
    };
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidParameter(format!(
            "noise rate {rate} outside [0, 1)"
        )));
    }
    let n = codes.len();
    let count = noise_count(rate, n);
    let mut flipped = index::sample(rng, n, count).into_vec();
    flipped.sort_unstable();
    let mut noisy = codes.clone();
    for &i in &flipped {
        let r = rng.random_range(0..n_classes - 1);
        noisy[i] = if r >= codes[i] { r + 1 } else { r };
    }
    let out = ds.with_labels(Labels::Class {
        codes: noisy,
        n_classes: *n_classes,
    })?;
    Ok((
        out,
        NoiseReport {
            rate,
            flipped_indices: flipped,
        },
    ))
}

/// Additive Gaussian noise on regression targets. Not part of the standard
/// pipeline, which leaves regression targets untouched.
pub fn inject_target_noise<R: Rng + ?Sized>(
    ds: &Dataset,
    sigma: f64,
    rng: &mut R,
) -> Result<Dataset> {
    let Labels::Numeric(targets) = &ds.labels else {
        return Err(Error::UnsupportedTask {
            expected: "numeric",
        });
    };
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidParameter(format!("noise sigma {sigma}: {e}")))?;
    let noisy = targets.iter().map(|t| t + normal.sample(rng)).collect();
    ds.with_labels(Labels::Numeric(noisy))
}

/// Gaussian blobs with their generating centers.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub dataset: Dataset,
    pub centers: Array2<f64>,
}

fn blob_centers<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Array2<f64> {
    const HALF_WIDTH: f64 = 10.0;
    const MIN_GAP: f64 = 6.0;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    while centers.len() < k {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..200 {
            let c: Vec<f64> = (0..d)
                .map(|_| rng.random_range(-HALF_WIDTH..HALF_WIDTH))
                .collect();
            let gap = centers
                .iter()
                .map(|o| {
                    o.iter()
                        .zip(&c)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            if gap >= MIN_GAP {
                best = Some((gap, c));
                break;
            }
            if best.as_ref().is_none_or(|(g, _)| gap > *g) {
                best = Some((gap, c));
            }
        }
        centers.push(best.unwrap().1);
    }
    Array2::from_shape_fn((k, d), |(i, j)| centers[i][j])
}

/// `k` isotropic Gaussian blobs of `n_per_cluster` points each, centers drawn
/// in `[-10, 10]^d` at least 6 apart where possible. The class label is the
/// generating blob; the label space always has at least two classes.
pub fn synthesize_blobs<R: Rng + ?Sized>(
    n_per_cluster: usize,
    d: usize,
    k: usize,
    spread: f64,
    rng: &mut R,
) -> Result<Blobs> {
    let (features, centers, blob) = blob_points(n_per_cluster, d, k, spread, rng)?;
    let dataset = Dataset::new(
        "blobs",
        features,
        Labels::Class {
            codes: blob,
            n_classes: k.max(2),
        },
        (0..d).map(|j| format!("x{j}")).collect(),
    )?;
    Ok(Blobs { dataset, centers })
}

/// Regression variant: each blob carries a base target in `[0, 100)` and
/// samples add `target_noise`-scaled Gaussian noise.
pub fn synthesize_regression_blobs<R: Rng + ?Sized>(
    n_per_cluster: usize,
    d: usize,
    k: usize,
    spread: f64,
    target_noise: f64,
    rng: &mut R,
) -> Result<Blobs> {
    let (features, centers, blob) = blob_points(n_per_cluster, d, k, spread, rng)?;
    let base: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..100.0)).collect();
    let noise = Normal::new(0.0, target_noise.max(0.0))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let targets = blob.iter().map(|&b| base[b] + noise.sample(rng)).collect();
    let dataset = Dataset::new(
        "regression_blobs",
        features,
        Labels::Numeric(targets),
        (0..d).map(|j| format!("x{j}")).collect(),
    )?;
    Ok(Blobs { dataset, centers })
}

fn blob_points<R: Rng + ?Sized>(
    n_per_cluster: usize,
    d: usize,
    k: usize,
    spread: f64,
    rng: &mut R,
) -> Result<(Array2<f64>, Array2<f64>, Vec<usize>)> {
    if k == 0 || d == 0 || n_per_cluster == 0 {
        return Err(Error::InvalidParameter(
            "blobs need k >= 1, d >= 1 and at least one point per cluster".into(),
        ));
    }
    let centers = blob_centers(d, k, rng);
    let normal =
        Normal::new(0.0, spread.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let n = n_per_cluster * k;
    let mut features = Array2::zeros((n, d));
    let mut blob = Vec::with_capacity(n);
    for (row, mut x) in features.rows_mut().into_iter().enumerate() {
        let b = row / n_per_cluster;
        for (j, v) in x.iter_mut().enumerate() {
            *v = centers[[b, j]] + normal.sample(rng);
        }
        blob.push(b);
    }
    Ok((features, centers, blob))
}

/// Per-class counts, for diagnostics and tests.
pub fn class_counts(labels: &Labels) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    if let Labels::Class { codes, .. } = labels {
        for &c in codes {
            *out.entry(c).or_insert(0) += 1;
        }
    }
    out
}
