//! Delta-k++ seeded k-means with pluggable point-to-centroid distance.
//!
//! With [`DistanceMode::Euclidean`] this is ordinary k-means. The fidelity
//! modes measure `1 - |<x|c>|^2` between amplitude encodings with the SWAP
//! test, which is the QMeans base learner. Centroids are always updated as
//! arithmetic means of the raw rows, and inertia is always reported as the
//! Euclidean k-means objective so runs in different modes share one scale.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::quantum::{self, QuantumState, Shots};
use crate::{Error, Output, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMode {
    Euclidean,
    FidelityExact,
    FidelityShots(u32),
}

impl DistanceMode {
    pub fn is_exact(&self) -> bool {
        !matches!(self, DistanceMode::FidelityShots(_))
    }

    fn shots(&self) -> Shots {
        match *self {
            DistanceMode::FidelityShots(s) => Shots::Sampled(s),
            _ => Shots::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMeansConfig {
    pub k: usize,
    pub delta: f64,
    pub mode: DistanceMode,
    pub max_iterations: usize,
    /// Convergence threshold on the largest centroid L2 shift.
    pub tolerance: f64,
}

impl Default for QMeansConfig {
    fn default() -> Self {
        QMeansConfig {
            k: 10,
            delta: 0.2,
            mode: DistanceMode::FidelityExact,
            max_iterations: 100,
            tolerance: 1e-4,
        }
    }
}

impl QMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta {} must be > 0",
                self.delta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
        }
        if let DistanceMode::FidelityShots(0) = self.mode {
            return Err(Error::InvalidParameter("shot count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-cluster outputs assigned from training labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClusterOutputs {
    Class(Vec<usize>),
    Numeric(Vec<f64>),
}

impl ClusterOutputs {
    pub fn get(&self, cluster: usize) -> Output {
        match self {
            ClusterOutputs::Class(v) => Output::Class(v[cluster]),
            ClusterOutputs::Numeric(v) => Output::Numeric(v[cluster]),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ClusterOutputs::Class(v) => v.len(),
            ClusterOutputs::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// `k x d`, one centroid per row.
    pub centroids: Array2<f64>,
    /// `None` until [`label_clusters`] runs.
    pub outputs: Option<ClusterOutputs>,
    pub mode: DistanceMode,
    pub iterations_run: usize,
    /// Euclidean objective of the final assignment against the final centroids.
    pub inertia: f64,
    /// Euclidean objective after each assign/update step.
    pub inertia_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }
}

fn squared_euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Distance evaluator. In fidelity modes the rows are amplitude encoded once
/// up front; centroid encodings are refreshed with [`Self::set_centers`].
/// Exact-mode distances are kept per centroid and reused while that centroid
/// is bitwise unchanged, and shared between bitwise identical rows.
struct Metric<'a> {
    mode: DistanceMode,
    rows: ArrayView2<'a, f64>,
    row_states: Vec<QuantumState>,
    /// First row with the same bits as row `i`.
    canonical: Vec<usize>,
    centers: Vec<CenterSlot>,
}

struct CenterSlot {
    bits: Vec<u64>,
    state: Option<QuantumState>,
    /// Distance per row; NaN until computed.
    dists: Vec<f64>,
}

impl<'a> Metric<'a> {
    fn new(rows: ArrayView2<'a, f64>, mode: DistanceMode) -> Result<Self> {
        let row_states = match mode {
            DistanceMode::Euclidean => Vec::new(),
            _ => rows
                .rows()
                .into_iter()
                .map(|r| quantum::amplitude_encode(r.as_slice().unwrap_or(&r.to_vec())))
                .collect::<Result<_>>()?,
        };
        let mut first = HashMap::new();
        let canonical = match mode {
            DistanceMode::Euclidean => Vec::new(),
            _ => rows
                .rows()
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    *first
                        .entry(r.iter().map(|v| v.to_bits()).collect::<Vec<u64>>())
                        .or_insert(i)
                })
                .collect(),
        };
        Ok(Metric {
            mode,
            rows,
            row_states,
            canonical,
            centers: Vec::new(),
        })
    }

    /// A zero centroid has no amplitude encoding; it is treated as orthogonal
    /// to every row (distance 1).
    fn set_centers(&mut self, centers: ArrayView2<f64>) {
        if self.mode == DistanceMode::Euclidean {
            return;
        }
        self.centers.truncate(centers.nrows());
        for (j, c) in centers.rows().into_iter().enumerate() {
            let bits: Vec<u64> = c.iter().map(|v| v.to_bits()).collect();
            if self.centers.get(j).is_some_and(|slot| slot.bits == bits) {
                continue;
            }
            let slot = CenterSlot {
                bits,
                state: quantum::amplitude_encode(&c.to_vec()).ok(),
                dists: vec![f64::NAN; self.rows.nrows()],
            };
            if j < self.centers.len() {
                self.centers[j] = slot;
            } else {
                self.centers.push(slot);
            }
        }
    }

    /// Distance of row `i` to center `j`: squared Euclidean or `1 - F`.
    fn distance<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        j: usize,
        centers: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<f64> {
        let mode = self.mode;
        if mode == DistanceMode::Euclidean {
            return Ok(squared_euclidean(self.rows.row(i), centers.row(j)));
        }
        let i = if mode.is_exact() {
            self.canonical[i]
        } else {
            i
        };
        let slot = &mut self.centers[j];
        let cached = slot.dists[i];
        if !cached.is_nan() {
            return Ok(cached);
        }
        let d = match &slot.state {
            Some(c) => 1.0 - quantum::fidelity(&self.row_states[i], c, mode.shots(), rng)?,
            None => 1.0,
        };
        if mode.is_exact() {
            slot.dists[i] = d;
        }
        Ok(d)
    }
}

/// Seeding probabilities `(d^2)^delta / sum (d^2)^delta` from squared
/// distances to the nearest chosen center. Returns `None` when every weight
/// vanishes.
pub fn seeding_probabilities(sq_dists: &[f64], delta: f64) -> Option<Vec<f64>> {
    let weights: Vec<f64> = sq_dists
        .iter()
        .map(|&d| if d > 0.0 { d.powf(delta) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    Some(weights.into_iter().map(|w| w / total).collect())
}

fn sample_weighted<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// One delta-k++ step: pick a row with probability
/// `(d^2)^delta / sum (d^2)^delta` given squared distances to the nearest
/// chosen center, or a uniform row not yet `taken` when every weight is zero.
pub fn draw_seed<R: Rng + ?Sized>(
    sq_dists: &[f64],
    taken: &[bool],
    delta: f64,
    rng: &mut R,
) -> usize {
    match seeding_probabilities(sq_dists, delta) {
        Some(p) => sample_weighted(&p, rng),
        None => {
            let free: Vec<usize> = (0..taken.len()).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        }
    }
}

/// Delta-k++ seeding: the first center is a uniform row; each further center
/// is row `i` with probability proportional to `(d_i^2)^delta`, where `d_i^2`
/// is the mode's distance to the nearest chosen center (squared Euclidean, or
/// the fidelity distance used directly). If every remaining weight is zero
/// the next center is uniform over the rows not chosen yet.
pub fn delta_kpp_init<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    k: usize,
    delta: f64,
    mode: DistanceMode,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::TooFewSamples { k, n });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must be > 0"
        )));
    }
    let mut metric = Metric::new(x, mode)?;
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut nearest = vec![f64::INFINITY; n];

    while chosen.len() < k {
        let latest = *chosen.last().unwrap();
        let center = x.select(ndarray::Axis(0), &[latest]);
        metric.set_centers(center.view());
        for (i, d) in nearest.iter_mut().enumerate() {
            let dist = if taken[i] {
                0.0
            } else {
                metric.distance(i, 0, center.view(), rng)?
            };
            *d = d.min(dist);
        }
        let next = draw_seed(&nearest, &taken, delta, rng);
        chosen.push(next);
        taken[next] = true;
    }
    Ok(x.select(ndarray::Axis(0), &chosen))
}

fn assign_with<R: Rng + ?Sized>(
    metric: &mut Metric,
    centroids: ArrayView2<f64>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    metric.set_centers(centroids);
    (0..metric.rows.nrows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for j in 0..centroids.nrows() {
                let d = metric.distance(i, j, centroids, rng)?;
                if d < best.1 {
                    best = (j, d);
                }
            }
            Ok(best.0)
        })
        .collect()
}

/// Nearest centroid for every row; ties go to the lowest cluster id.
pub fn assign_clusters<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    centroids: ArrayView2<f64>,
    mode: DistanceMode,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if centroids.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if centroids.ncols() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: centroids.ncols(),
            actual: x.ncols(),
        });
    }
    let mut metric = Metric::new(x, mode)?;
    assign_with(&mut metric, centroids, rng)
}

/// Arithmetic mean of each cluster's rows. An empty cluster is moved onto the
/// row farthest (squared Euclidean) from the centroid it was assigned to
/// under `previous`; several empty clusters take distinct rows.
pub fn update_centroids(
    x: ArrayView2<f64>,
    assignment: &[usize],
    previous: ArrayView2<f64>,
) -> Array2<f64> {
    let k = previous.nrows();
    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &c) in x.rows().into_iter().zip(assignment) {
        let mut s = sums.row_mut(c);
        s += &row;
        counts[c] += 1;
    }
    let mut used = vec![false; x.nrows()];
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            sums.row_mut(c).mapv_inplace(|v| v / n);
            continue;
        }
        let far = (0..x.nrows())
            .filter(|&i| !used[i])
            .map(|i| (i, squared_euclidean(x.row(i), previous.row(assignment[i]))))
            .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        match far {
            Some((i, _)) => {
                used[i] = true;
                sums.row_mut(c).assign(&x.row(i));
            }
            None => sums.row_mut(c).assign(&previous.row(c)),
        }
    }
    sums
}

/// Euclidean k-means objective of an assignment.
pub fn inertia(x: ArrayView2<f64>, centroids: ArrayView2<f64>, assignment: &[usize]) -> f64 {
    x.rows()
        .into_iter()
        .zip(assignment)
        .map(|(r, &c)| squared_euclidean(r, centroids.row(c)))
        .sum()
}

/// A fitted clusterer together with the training rows' assignment to its
/// final centroids.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: ClusterModel,
    pub assignment: Vec<usize>,
}

/// Delta-k++ seeding followed by Lloyd iterations until the largest centroid
/// shift drops below `tolerance` or `max_iterations` is reached.
pub fn fit_qmeans<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    config: &QMeansConfig,
    rng: &mut R,
) -> Result<FitOutcome> {
    fit_with(x, config, rng, true)
}

/// Lloyd iterations from delta-k++ seeds. In exact modes one iteration is a
/// pure function of the incoming centroids, so once a centroid matrix repeats
/// the run is periodic and, with `fast_forward`, the state at the iteration
/// cap is read off the stored cycle instead of being recomputed.
fn fit_with<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    config: &QMeansConfig,
    rng: &mut R,
    fast_forward: bool,
) -> Result<FitOutcome> {
    config.validate()?;
    let mut centroids = delta_kpp_init(x, config.k, config.delta, config.mode, rng)?;
    let mut metric = Metric::new(x, config.mode)?;
    let mut history = Vec::new();
    let mut iterations_run = 0;
    let track = fast_forward && config.mode.is_exact();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut entering: Vec<Array2<f64>> = Vec::new();
    let cap = config.max_iterations;
    for it in 1..=cap {
        if track {
            let key: Vec<u64> = centroids.iter().map(|v| v.to_bits()).collect();
            if let Some(&s) = seen.get(&key) {
                let period = it - s;
                for j in it..=cap {
                    history.push(history[s - 1 + (j - s) % period]);
                }
                centroids = entering[s - 1 + (cap + 1 - s) % period].clone();
                iterations_run = cap;
                break;
            }
            seen.insert(key, it);
            entering.push(centroids.clone());
        }
        let assignment = assign_with(&mut metric, centroids.view(), rng)?;
        let updated = update_centroids(x, &assignment, centroids.view());
        let shift = updated
            .rows()
            .into_iter()
            .zip(centroids.rows())
            .map(|(a, b)| squared_euclidean(a, b).sqrt())
            .fold(0.0, f64::max);
        history.push(inertia(x, updated.view(), &assignment));
        centroids = updated;
        iterations_run = it;
        if shift < config.tolerance {
            break;
        }
    }
    let assignment = assign_with(&mut metric, centroids.view(), rng)?;
    let final_inertia = inertia(x, centroids.view(), &assignment);
    Ok(FitOutcome {
        model: ClusterModel {
            centroids,
            outputs: None,
            mode: config.mode,
            iterations_run,
            inertia: final_inertia,
            inertia_history: history,
        },
        assignment,
    })
}

/// Index of the largest count; the lowest code wins ties.
pub(crate) fn modal_code(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

/// Turn clusters into a predictor: majority training label per cluster (ties
/// to the smallest code) or mean target. Clusters without members take the
/// global majority label or global mean.
pub fn label_clusters(
    mut model: ClusterModel,
    labels: &Labels,
    assignment: &[usize],
) -> Result<ClusterModel> {
    if labels.len() != assignment.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: assignment.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = model.k();
    if let Some(&bad) = assignment.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidParameter(format!(
            "cluster id {bad} >= k = {k}"
        )));
    }
    let outputs = match labels {
        Labels::Class { codes, n_classes } => {
            let mut counts = vec![vec![0usize; *n_classes]; k];
            let mut global = vec![0usize; *n_classes];
            for (&c, &y) in assignment.iter().zip(codes) {
                counts[c][y] += 1;
                global[y] += 1;
            }
            let fallback = modal_code(&global);
            ClusterOutputs::Class(
                counts
                    .iter()
                    .map(|cnt| {
                        if cnt.iter().any(|&n| n > 0) {
                            modal_code(cnt)
                        } else {
                            fallback
                        }
                    })
                    .collect(),
            )
        }
        Labels::Numeric(targets) => {
            let mut sums = vec![0.0; k];
            let mut counts = vec![0usize; k];
            for (&c, &y) in assignment.iter().zip(targets) {
                sums[c] += y;
                counts[c] += 1;
            }
            let global = targets.iter().sum::<f64>() / targets.len() as f64;
            ClusterOutputs::Numeric(
                sums.iter()
                    .zip(&counts)
                    .map(|(&s, &n)| if n > 0 { s / n as f64 } else { global })
                    .collect(),
            )
        }
    };
    model.outputs = Some(outputs);
    Ok(model)
}

/// Nearest centroid of `x` under the model's distance mode.
pub fn nearest_cluster<R: Rng + ?Sized>(
    model: &ClusterModel,
    x: &[f64],
    rng: &mut R,
) -> Result<usize> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.len(),
        });
    }
    let row = ArrayView2::from_shape((1, x.len()), x).expect("row view");
    let mut metric = Metric::new(row, model.mode)?;
    Ok(assign_with(&mut metric, model.centroids.view(), rng)?[0])
}

pub fn predict<R: Rng + ?Sized>(model: &ClusterModel, x: &[f64], rng: &mut R) -> Result<Output> {
    let outputs = model.outputs.as_ref().ok_or(Error::Unlabeled)?;
    Ok(outputs.get(nearest_cluster(model, x, rng)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthesize_blobs;
    use crate::rng::seeded;
    use ndarray::array;

    fn euclid(k: usize) -> QMeansConfig {
        QMeansConfig {
            k,
            delta: 1.0,
            mode: DistanceMode::Euclidean,
            ..QMeansConfig::default()
        }
    }

    fn unlabeled(centroids: Array2<f64>, mode: DistanceMode) -> ClusterModel {
        ClusterModel {
            centroids,
            outputs: None,
            mode,
            iterations_run: 0,
            inertia: 0.0,
            inertia_history: vec![],
        }
    }

    #[test]
    fn seeding_law_direct_substitution() {
        let p = seeding_probabilities(&[1.0, 4.0], 1.0).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        // distances (1, 2), delta 1/2: weights (1, 2)
        let p = seeding_probabilities(&[1.0, 4.0], 0.5).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(seeding_probabilities(&[0.0, 0.0], 0.3).is_none());
    }

    #[test]
    fn init_rejects_more_clusters_than_rows() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            delta_kpp_init(x.view(), 3, 1.0, DistanceMode::Euclidean, &mut seeded(0)),
            Err(Error::TooFewSamples { k: 3, n: 2 })
        ));
    }

    #[test]
    fn init_on_duplicates_falls_back_to_uniform() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let c = delta_kpp_init(x.view(), 3, 0.5, DistanceMode::Euclidean, &mut seeded(1)).unwrap();
        assert_eq!(c.nrows(), 3);
    }

    #[test]
    fn init_picks_distinct_rows() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [5.0, 5.0], [9.0, 0.0]];
        for seed in 0..20 {
            let c = delta_kpp_init(x.view(), 4, 0.3, DistanceMode::Euclidean, &mut seeded(seed))
                .unwrap();
            let mut rows: Vec<Vec<u64>> = c
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v.to_bits()).collect())
                .collect();
            rows.sort();
            rows.dedup();
            assert_eq!(rows.len(), 4);
        }
    }

    #[test]
    fn self_match_and_tie_rule() {
        let c = array![[0.0, 0.0], [4.0, 0.0], [1.0, 1.0]];
        let x = array![[1.0, 1.0], [2.0, 0.0]];
        let mut rng = seeded(0);
        for mode in [DistanceMode::Euclidean, DistanceMode::FidelityExact] {
            let a =
                assign_clusters(x.slice(ndarray::s![0..1, ..]), c.view(), mode, &mut rng).unwrap();
            assert_eq!(a, vec![2]);
        }
        let tied = array![[-1.0, 0.0], [1.0, 0.0]];
        let a = assign_clusters(
            array![[0.0, 3.0]].view(),
            tied.view(),
            DistanceMode::Euclidean,
            &mut rng,
        )
        .unwrap();
        assert_eq!(a, vec![0]);
        assert_eq!(
            assign_clusters(x.view(), c.view(), DistanceMode::Euclidean, &mut rng).unwrap()[1],
            2
        );
    }

    #[test]
    fn cycle_fast_forward_matches_full_run() {
        let ds = crate::data::load_csv(
            concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wine.csv"),
            "label",
            crate::Task::Classification,
        )
        .unwrap();
        let ds = crate::data::apply_scaler(&crate::data::fit_scaler(&ds), &ds);
        for cap in [37, 40] {
            let config = QMeansConfig {
                max_iterations: cap,
                ..QMeansConfig::default()
            };
            let fast = fit_with(ds.features.view(), &config, &mut seeded(3), true).unwrap();
            let full = fit_with(ds.features.view(), &config, &mut seeded(3), false).unwrap();
            assert_eq!(fast.model, full.model);
            assert_eq!(fast.assignment, full.assignment);
            assert_eq!(fast.model.inertia_history.len(), cap);
        }
    }

    #[test]
    fn fidelity_assignment_rejects_zero_row() {
        let c = array![[1.0, 0.0]];
        let r = assign_clusters(
            array![[0.0, 0.0]].view(),
            c.view(),
            DistanceMode::FidelityExact,
            &mut seeded(0),
        );
        assert!(matches!(r, Err(Error::Unencodable { .. })));
    }

    #[test]
    fn update_means_and_empty_relocation() {
        let x = array![[0.0, 0.0], [2.0, 2.0], [10.0, 0.0]];
        let prev = array![[1.0, 1.0], [10.0, 0.0], [50.0, 50.0]];
        let c = update_centroids(x.view(), &[0, 0, 1], prev.view());
        assert_eq!(c.row(0), array![1.0, 1.0]);
        assert_eq!(c.row(1), array![10.0, 0.0]);
        // Rows 0 and 1 both sit at squared distance 2 from centroid 0; lowest wins.
        assert_eq!(c.row(2), array![0.0, 0.0]);

        let all = update_centroids(x.view(), &[0, 0, 0], array![[0.0, 0.0]].view());
        assert_eq!(all.row(0), array![4.0, 2.0 / 3.0]);
    }

    #[test]
    fn infinite_tolerance_stops_after_one_iteration() {
        let b = synthesize_blobs(10, 2, 3, 0.5, &mut seeded(0)).unwrap();
        let cfg = QMeansConfig {
            tolerance: f64::INFINITY,
            ..euclid(3)
        };
        let fit = fit_qmeans(b.dataset.features.view(), &cfg, &mut seeded(1)).unwrap();
        assert_eq!(fit.model.iterations_run, 1);
    }

    #[test]
    fn one_row_per_cluster_has_zero_inertia() {
        let x = array![[0.0, 1.0], [3.0, 3.0], [-2.0, 5.0]];
        for mode in [DistanceMode::Euclidean, DistanceMode::FidelityExact] {
            let cfg = QMeansConfig { mode, ..euclid(3) };
            let fit = fit_qmeans(x.view(), &cfg, &mut seeded(2)).unwrap();
            assert_eq!(fit.model.inertia, 0.0);
            let mut a = fit.assignment.clone();
            a.sort();
            assert_eq!(a, vec![0, 1, 2]);
        }
    }

    #[test]
    fn recovers_separated_blobs() {
        let b = synthesize_blobs(30, 3, 4, 0.3, &mut seeded(7)).unwrap();
        let cfg = QMeansConfig {
            delta: 2.0,
            ..euclid(4)
        };
        let fit = fit_qmeans(b.dataset.features.view(), &cfg, &mut seeded(8)).unwrap();
        let Labels::Class { codes, .. } = &b.dataset.labels else {
            unreachable!()
        };
        // Every fitted cluster is pure and every blob center has a centroid nearby.
        for cluster in 0..4 {
            let members: Vec<usize> = (0..codes.len())
                .filter(|&i| fit.assignment[i] == cluster)
                .map(|i| codes[i])
                .collect();
            assert!(
                members.windows(2).all(|w| w[0] == w[1]),
                "cluster {cluster} impure"
            );
        }
        for center in b.centers.rows() {
            let best = fit
                .model
                .centroids
                .rows()
                .into_iter()
                .map(|c| squared_euclidean(c, center).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.3, "center missed by {best}");
        }
    }

    #[test]
    fn euclidean_inertia_never_increases() {
        for seed in 0..10 {
            let b = synthesize_blobs(25, 2, 5, 3.0, &mut seeded(seed)).unwrap();
            let cfg = QMeansConfig {
                k: 7,
                delta: 0.3,
                tolerance: 0.0,
                max_iterations: 30,
                mode: DistanceMode::Euclidean,
            };
            let fit = fit_qmeans(b.dataset.features.view(), &cfg, &mut seeded(seed + 100)).unwrap();
            for w in fit.model.inertia_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", fit.model.inertia_history);
            }
            assert!(fit.model.inertia <= *fit.model.inertia_history.last().unwrap() + 1e-9);
        }
    }

    #[test]
    fn labels_majority_tie_and_mean() {
        let model = unlabeled(array![[0.0], [1.0]], DistanceMode::Euclidean);
        let labels = Labels::Class {
            codes: vec![0, 0, 1, 1, 1, 0],
            n_classes: 2,
        };
        let m = label_clusters(model.clone(), &labels, &[0, 0, 0, 1, 1, 1]).unwrap();
        // cluster 0: [0, 0, 1] -> 0 ; cluster 1: [1, 1, 0] -> 1
        assert_eq!(m.outputs, Some(ClusterOutputs::Class(vec![0, 1])));

        let tie = Labels::Class {
            codes: vec![1, 0, 1, 0],
            n_classes: 2,
        };
        let m = label_clusters(model.clone(), &tie, &[0, 0, 0, 0]).unwrap();
        // cluster 0 tied 2-2 -> 0; cluster 1 empty -> global majority (tied) -> 0
        assert_eq!(m.outputs, Some(ClusterOutputs::Class(vec![0, 0])));

        let targets = Labels::Numeric(vec![2.0, 4.0, 9.0]);
        let m = label_clusters(model.clone(), &targets, &[1, 1, 1]).unwrap();
        assert_eq!(m.outputs, Some(ClusterOutputs::Numeric(vec![5.0, 5.0])));
        let m = label_clusters(model, &Labels::Numeric(vec![2.0, 4.0]), &[0, 0]).unwrap();
        assert_eq!(m.outputs.unwrap().get(0), Output::Numeric(3.0));
    }

    #[test]
    fn predict_requires_labels_and_matching_dimension() {
        let model = unlabeled(array![[0.0, 1.0]], DistanceMode::Euclidean);
        assert!(matches!(
            predict(&model, &[0.0, 1.0], &mut seeded(0)),
            Err(Error::Unlabeled)
        ));
        let labeled = label_clusters(model, &Labels::Numeric(vec![7.0]), &[0]).unwrap();
        assert_eq!(
            predict(&labeled, &[100.0, -3.0], &mut seeded(0)).unwrap(),
            Output::Numeric(7.0)
        );
        assert!(matches!(
            predict(&labeled, &[1.0], &mut seeded(0)),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn predict_exact_hit() {
        let c = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [3.0, 3.0]];
        let mut model = unlabeled(c, DistanceMode::Euclidean);
        model.outputs = Some(ClusterOutputs::Class(vec![4, 5, 6, 7]));
        assert_eq!(
            predict(&model, &[3.0, 3.0], &mut seeded(0)).unwrap(),
            Output::Class(7)
        );
    }

    #[test]
    fn fit_is_deterministic() {
        let b = synthesize_blobs(20, 4, 3, 2.0, &mut seeded(3)).unwrap();
        for mode in [DistanceMode::Euclidean, DistanceMode::FidelityExact] {
            let cfg = QMeansConfig {
                k: 5,
                delta: 0.2,
                mode,
                ..QMeansConfig::default()
            };
            let a = fit_qmeans(b.dataset.features.view(), &cfg, &mut seeded(11)).unwrap();
            let c = fit_qmeans(b.dataset.features.view(), &cfg, &mut seeded(11)).unwrap();
            assert_eq!(a.model, c.model);
            assert_eq!(a.assignment, c.assignment);
        }
    }

    #[test]
    fn config_validation() {
        assert!(QMeansConfig {
            k: 0,
            ..QMeansConfig::default()
        }
        .validate()
        .is_err());
        assert!(QMeansConfig {
            delta: 0.0,
            ..QMeansConfig::default()
        }
        .validate()
        .is_err());
        assert!(QMeansConfig {
            max_iterations: 0,
            ..QMeansConfig::default()
        }
        .validate()
        .is_err());
        assert!(QMeansConfig {
            mode: DistanceMode::FidelityShots(0),
            ..QMeansConfig::default()
        }
        .validate()
        .is_err());
    }
}
