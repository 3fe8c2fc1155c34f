//! CART decision trees and bagged trees, the supervised comparison learner.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::modal_code;
use crate::data::{Dataset, Labels};
use crate::ensemble::{self, aggregate, EnsemblePrediction};
use crate::{Error, Output, Result, Task};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(Output),
    Split {
        feature: usize,
        threshold: f64,
        /// Rows with `x[feature] <= threshold`.
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub n_features: usize,
    pub config: TreeConfig,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 1,
                Node::Split { left, right, .. } => go(left) + go(right),
            }
        }
        go(&self.root)
    }
}

/// `1 - sum p_c^2` of class counts.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

enum Target<'a> {
    Class {
        codes: &'a [usize],
        n_classes: usize,
    },
    Numeric(&'a [f64]),
}

impl Target<'_> {
    fn impurity(&self, rows: &[usize]) -> f64 {
        match self {
            Target::Class { codes, n_classes } => {
                let mut counts = vec![0; *n_classes];
                for &i in rows {
                    counts[codes[i]] += 1;
                }
                gini(&counts)
            }
            Target::Numeric(y) => {
                let n = rows.len() as f64;
                let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
                rows.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>() / n
            }
        }
    }

    fn leaf(&self, rows: &[usize]) -> Output {
        match self {
            Target::Class { codes, n_classes } => {
                let mut counts = vec![0; *n_classes];
                for &i in rows {
                    counts[codes[i]] += 1;
                }
                Output::Class(modal_code(&counts))
            }
            Target::Numeric(y) => {
                Output::Numeric(rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64)
            }
        }
    }

    /// Best threshold on one feature: `(weighted child impurity, threshold)`,
    /// scanning midpoints of sorted distinct values left to right.
    fn best_threshold(&self, sorted: &[(f64, usize)]) -> Option<(f64, f64)> {
        let n = sorted.len() as f64;
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |score: f64, lo: f64, hi: f64| {
            let mut t = 0.5 * (lo + hi);
            if t >= hi {
                t = lo;
            }
            if best.is_none_or(|(b, _)| score < b) {
                best = Some((score, t));
            }
        };
        match self {
            Target::Class { codes, n_classes } => {
                let mut left = vec![0usize; *n_classes];
                let mut right = vec![0usize; *n_classes];
                for &(_, i) in sorted {
                    right[codes[i]] += 1;
                }
                for s in 0..sorted.len() - 1 {
                    let c = codes[sorted[s].1];
                    left[c] += 1;
                    right[c] -= 1;
                    let (lo, hi) = (sorted[s].0, sorted[s + 1].0);
                    if lo < hi {
                        let nl = (s + 1) as f64;
                        let score = (nl * gini(&left) + (n - nl) * gini(&right)) / n;
                        consider(score, lo, hi);
                    }
                }
            }
            Target::Numeric(y) => {
                let (mut ls, mut lq) = (0.0, 0.0);
                let rs: f64 = sorted.iter().map(|&(_, i)| y[i]).sum();
                let rq: f64 = sorted.iter().map(|&(_, i)| y[i] * y[i]).sum();
                let (mut rs, mut rq) = (rs, rq);
                for s in 0..sorted.len() - 1 {
                    let v = y[sorted[s].1];
                    ls += v;
                    lq += v * v;
                    rs -= v;
                    rq -= v * v;
                    let (lo, hi) = (sorted[s].0, sorted[s + 1].0);
                    if lo < hi {
                        let nl = (s + 1) as f64;
                        let nr = n - nl;
                        // n_side * variance = sum of squares - sum^2 / n_side
                        let sse = (lq - ls * ls / nl).max(0.0) + (rq - rs * rs / nr).max(0.0);
                        consider(sse / n, lo, hi);
                    }
                }
            }
        }
        best
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    target: Target<'a>,
    config: TreeConfig,
}

impl Builder<'_> {
    fn grow(&self, rows: &[usize], depth: usize) -> Node {
        let impurity = self.target.impurity(rows);
        let depth_capped = self.config.max_depth.is_some_and(|m| depth >= m);
        if impurity <= 0.0 || rows.len() < self.config.min_samples_split || depth_capped {
            return Node::Leaf(self.target.leaf(rows));
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..self.x.ncols() {
            let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&i| (self.x[[i, f]], i)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((score, t)) = self.target.best_threshold(&sorted) {
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, f, t));
                }
            }
        }
        match best {
            Some((score, feature, threshold)) if score < impurity - 1e-12 => {
                let (left, right): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| self.x[[i, feature]] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.grow(&left, depth + 1)),
                    right: Box::new(self.grow(&right, depth + 1)),
                }
            }
            _ => Node::Leaf(self.target.leaf(rows)),
        }
    }
}

/// Greedy CART: each node takes the (feature, midpoint threshold) with the
/// lowest weighted Gini impurity (classification) or variance (regression),
/// preferring the lowest feature index and then the lowest threshold on ties.
/// A node becomes a leaf when pure, smaller than `min_samples_split`, at
/// `max_depth`, or when no split strictly lowers its impurity.
pub fn fit_tree(x: ArrayView2<f64>, y: &Labels, config: &TreeConfig) -> Result<DecisionTree> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if config.min_samples_split < 2 {
        return Err(Error::InvalidParameter(
            "min_samples_split must be >= 2".into(),
        ));
    }
    let target = match y {
        Labels::Class { codes, n_classes } => Target::Class {
            codes,
            n_classes: *n_classes,
        },
        Labels::Numeric(v) => Target::Numeric(v),
    };
    let builder = Builder {
        x,
        target,
        config: *config,
    };
    let rows: Vec<usize> = (0..x.nrows()).collect();
    Ok(DecisionTree {
        root: builder.grow(&rows, 0),
        n_features: x.ncols(),
        config: *config,
    })
}

pub fn predict_tree(tree: &DecisionTree, x: &[f64]) -> Result<Output> {
    if x.len() != tree.n_features {
        return Err(Error::DimensionMismatch {
            expected: tree.n_features,
            actual: x.len(),
        });
    }
    let mut node = &tree.root;
    loop {
        match node {
            Node::Leaf(out) => return Ok(*out),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if x[*feature] <= *threshold {
                    left
                } else {
                    right
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    pub trees: Vec<DecisionTree>,
    pub task: Task,
    pub bootstrap_fraction: f64,
    pub seed: u64,
}

/// `n_trees` trees, tree `i` fitted on the rows drawn from learner stream `i`
/// of `seed` (the same sampler the clustering ensemble uses).
pub fn fit_bagged_trees(
    train: &Dataset,
    n_trees: usize,
    bootstrap_fraction: f64,
    config: &TreeConfig,
    seed: u64,
) -> Result<BaggedTrees> {
    if n_trees == 0 {
        return Err(Error::InvalidParameter("need at least one tree".into()));
    }
    ensemble::validate_fraction(bootstrap_fraction)?;
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let mut stream = ensemble::learner_stream(seed, i);
            let rows =
                ensemble::learner_sample(train.n_samples(), bootstrap_fraction, &mut stream)?;
            let sample = train.subset(&rows);
            fit_tree(sample.features.view(), &sample.labels, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaggedTrees {
        trees,
        task: train.task(),
        bootstrap_fraction,
        seed,
    })
}

pub fn predict_bagged(model: &BaggedTrees, x: &[f64]) -> Result<EnsemblePrediction> {
    let outputs = model
        .trees
        .iter()
        .map(|t| predict_tree(t, x))
        .collect::<Result<Vec<_>>>()?;
    aggregate(model.task, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthesize_blobs;
    use crate::rng::seeded;
    use ndarray::array;

    fn class(codes: Vec<usize>, n: usize) -> Labels {
        Labels::Class {
            codes,
            n_classes: n,
        }
    }

    #[test]
    fn gini_values() {
        assert!((gini(&[2, 2]) - 0.5).abs() < 1e-15);
        assert_eq!(gini(&[5, 0]), 0.0);
        assert!((gini(&[1, 1, 1]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pure_input_is_one_leaf() {
        let x = array![[1.0], [5.0], [2.0]];
        let t = fit_tree(x.view(), &class(vec![1, 1, 1], 2), &TreeConfig::default()).unwrap();
        assert_eq!(t.root, Node::Leaf(Output::Class(1)));
        assert_eq!(predict_tree(&t, &[100.0]).unwrap(), Output::Class(1));
    }

    #[test]
    fn separable_line_splits_at_midpoint() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let y = class(vec![0, 0, 1, 1], 2);
        let t = fit_tree(x.view(), &y, &TreeConfig::default()).unwrap();
        match &t.root {
            Node::Split {
                feature, threshold, ..
            } => assert_eq!((*feature, *threshold), (0, 2.5)),
            leaf => panic!("expected split, got {leaf:?}"),
        }
        for (i, row) in x.rows().into_iter().enumerate() {
            assert_eq!(predict_tree(&t, &row.to_vec()).unwrap(), y.output(i));
        }
        // boundary goes left
        assert_eq!(predict_tree(&t, &[2.5]).unwrap(), Output::Class(0));
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let x = array![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]];
        let t = fit_tree(
            x.view(),
            &class(vec![0, 0, 1, 1], 2),
            &TreeConfig::default(),
        )
        .unwrap();
        assert!(matches!(t.root, Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_limit_and_min_split() {
        let b = synthesize_blobs(20, 2, 4, 3.0, &mut seeded(1)).unwrap();
        let stump = TreeConfig {
            max_depth: Some(1),
            ..TreeConfig::default()
        };
        let t = fit_tree(b.dataset.features.view(), &b.dataset.labels, &stump).unwrap();
        assert!(t.depth() <= 1);
        let x = array![[0.0], [1.0], [2.0]];
        let big = TreeConfig {
            min_samples_split: 4,
            ..TreeConfig::default()
        };
        let t = fit_tree(x.view(), &class(vec![0, 1, 0], 2), &big).unwrap();
        assert_eq!(t.root, Node::Leaf(Output::Class(0)));
        assert!(fit_tree(
            x.view(),
            &class(vec![0, 1, 0], 2),
            &TreeConfig {
                min_samples_split: 1,
                ..big
            }
        )
        .is_err());
    }

    #[test]
    fn regression_split_and_leaf_means() {
        let x = array![[0.0], [1.0], [10.0], [11.0]];
        let y = Labels::Numeric(vec![1.0, 3.0, 10.0, 10.0]);
        let t = fit_tree(
            x.view(),
            &y,
            &TreeConfig {
                max_depth: Some(1),
                ..TreeConfig::default()
            },
        )
        .unwrap();
        assert_eq!(predict_tree(&t, &[0.5]).unwrap(), Output::Numeric(2.0));
        assert_eq!(predict_tree(&t, &[20.0]).unwrap(), Output::Numeric(10.0));
    }

    #[test]
    fn conflicting_duplicates_take_majority() {
        let x = array![[1.0], [1.0], [1.0]];
        let t = fit_tree(x.view(), &class(vec![1, 0, 1], 2), &TreeConfig::default()).unwrap();
        assert_eq!(t.root, Node::Leaf(Output::Class(1)));
    }

    #[test]
    fn errors() {
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            fit_tree(
                empty.view(),
                &Labels::Numeric(vec![]),
                &TreeConfig::default()
            ),
            Err(Error::EmptyInput)
        ));
        let t = fit_tree(
            array![[1.0, 2.0]].view(),
            &Labels::Numeric(vec![1.0]),
            &TreeConfig::default(),
        )
        .unwrap();
        assert!(predict_tree(&t, &[1.0]).is_err());
    }

    #[test]
    fn single_full_tree_bag_equals_tree() {
        let b = synthesize_blobs(15, 3, 3, 2.5, &mut seeded(4)).unwrap();
        let cfg = TreeConfig::default();
        let bag = fit_bagged_trees(&b.dataset, 1, 1.0, &cfg, 3).unwrap();
        let tree = fit_tree(b.dataset.features.view(), &b.dataset.labels, &cfg).unwrap();
        assert_eq!(bag.trees[0], tree);
        for row in b.dataset.features.rows() {
            let x = row.to_vec();
            assert_eq!(
                predict_bagged(&bag, &x).unwrap().value,
                predict_tree(&tree, &x).unwrap()
            );
        }
    }

    #[test]
    fn bagged_trees_are_seeded() {
        let b = synthesize_blobs(15, 3, 3, 2.5, &mut seeded(4)).unwrap();
        let a = fit_bagged_trees(&b.dataset, 5, 0.5, &TreeConfig::default(), 8).unwrap();
        let c = fit_bagged_trees(&b.dataset, 5, 0.5, &TreeConfig::default(), 8).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.trees.len(), 5);
    }
}
