//! CART classification trees (Gini) and regression trees for boosting.
//!
//! Candidate thresholds are midpoints between adjacent distinct values; a
//! sample goes left when `x <= threshold`. Among equally good splits the
//! lower feature index wins, then the lower threshold.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check_training_set;
use crate::error::Result;
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: Vec<u64>,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

impl Node {
    pub fn counts(&self) -> &[u64] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts } => counts,
        }
    }
}

/// Classification tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
    pub config: TreeConfig,
}

impl TreeModel {
    fn leaf_for(&self, x: &[f64]) -> &[u64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Majority class at the leaf; ties go to the lower class.
    pub fn predict_row(&self, x: &[f64]) -> usize {
        let counts = self.leaf_for(x);
        let mut best = 0;
        for (c, &v) in counts.iter().enumerate() {
            if v > counts[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, matrix: &FeatureMatrix) -> Vec<usize> {
        matrix.rows_iter().map(|x| self.predict_row(x)).collect()
    }

    /// Leaf share of class 1.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        matrix
            .rows_iter()
            .map(|x| {
                let c = self.leaf_for(x);
                let total: u64 = c.iter().sum();
                if total == 0 || c.len() < 2 {
                    0.0
                } else {
                    c[1] as f64 / total as f64
                }
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// `sum(c^2) / n` as an exact fraction; larger means purer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    pub(crate) fn of(counts: &[u64]) -> Self {
        let n: u64 = counts.iter().sum();
        Self {
            num: counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum(),
            den: u128::from(n.max(1)),
        }
    }

    /// Weighted purity of a two-way split.
    pub(crate) fn split(left: &[u64], right: &[u64]) -> Self {
        let (l, r) = (Self::of(left), Self::of(right));
        Self {
            num: l.num * r.den + r.num * l.den,
            den: l.den * r.den,
        }
    }

    pub(crate) fn gt(self, other: Self) -> bool {
        self.num * other.den > other.num * self.den
    }
}

/// Midpoint of two adjacent distinct values that still separates them.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Train a CART tree on all rows.
pub fn train_tree(
    matrix: &FeatureMatrix,
    labels: &[usize],
    config: &TreeConfig,
) -> Result<TreeModel> {
    check_training_set(matrix, labels)?;
    let samples: Vec<usize> = (0..matrix.nrows()).collect();
    Ok(grow_tree(matrix, labels, &samples, config, None))
}

/// Grow a tree over `samples` (indices may repeat). With `features`, each
/// split considers a fresh random subset of that many columns.
pub(crate) fn grow_tree(
    matrix: &FeatureMatrix,
    labels: &[usize],
    samples: &[usize],
    config: &TreeConfig,
    mut features: Option<(usize, &mut ChaCha8Rng)>,
) -> TreeModel {
    let n_classes = labels.iter().max().map_or(1, |m| m + 1).max(2);
    let mut nodes = Vec::new();
    // (node slot, samples, depth)
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, samples.to_vec(), 0)];
    nodes.push(Node::Leaf { counts: vec![] });
    while let Some((slot, idx, depth)) = stack.pop() {
        let counts = class_counts(labels, &idx, n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = config.max_depth.is_none_or(|m| depth < m);
        let split = if !pure && depth_ok && idx.len() >= config.min_samples_split.max(2) {
            let candidates: Vec<usize> = match features.as_mut() {
                Some((m, rng)) if *m < matrix.ncols() => {
                    let mut f = sample(*rng, matrix.ncols(), *m).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..matrix.ncols()).collect(),
            };
            best_split(matrix, labels, &idx, &candidates, n_classes, &counts)
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| matrix.get(i, feature) <= threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { counts: vec![] });
                nodes.push(Node::Leaf { counts: vec![] });
                nodes[slot] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    counts,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => nodes[slot] = Node::Leaf { counts },
        }
    }
    TreeModel {
        nodes,
        n_classes,
        config: config.clone(),
    }
}

fn class_counts(labels: &[usize], idx: &[usize], n_classes: usize) -> Vec<u64> {
    let mut c = vec![0u64; n_classes];
    for &i in idx {
        c[labels[i]] += 1;
    }
    c
}

/// Best (feature, threshold) over all candidates. Impure nodes split even
/// when no candidate improves purity (XOR-like layouts); a split can never
/// lower it.
fn best_split(
    matrix: &FeatureMatrix,
    labels: &[usize],
    idx: &[usize],
    features: &[usize],
    n_classes: usize,
    parent: &[u64],
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, Purity)> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| matrix.get(a, f).total_cmp(&matrix.get(b, f)));
        let mut left = vec![0u64; n_classes];
        let mut right = parent.to_vec();
        for w in 0..order.len() - 1 {
            let i = order[w];
            left[labels[i]] += 1;
            right[labels[i]] -= 1;
            let (lo, hi) = (matrix.get(i, f), matrix.get(order[w + 1], f));
            if lo == hi {
                continue;
            }
            let p = Purity::split(&left, &right);
            if best.as_ref().is_none_or(|b| p.gt(b.2)) {
                best = Some((f, midpoint(lo, hi), p));
            }
        }
    }
    debug_assert!(best.is_none_or(|b| !Purity::of(parent).gt(b.2)));
    best.map(|(f, t, _)| (f, t))
}

/// Regression tree whose leaves hold a Newton step `sum(g) / sum(h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegressionNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegressionNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegressionNode::Leaf { value } => return *value,
                RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

/// Least-squares tree on `targets`; leaf values are `sum(targets) / sum(hess)`.
pub(crate) fn grow_regression_tree(
    matrix: &FeatureMatrix,
    targets: &[f64],
    hess: &[f64],
    max_depth: usize,
    min_samples_split: usize,
) -> RegressionTree {
    let mut nodes = vec![RegressionNode::Leaf { value: 0.0 }];
    let all: Vec<usize> = (0..matrix.nrows()).collect();
    let mut stack = vec![(0usize, all, 0usize)];
    while let Some((slot, idx, depth)) = stack.pop() {
        let split = if depth < max_depth && idx.len() >= min_samples_split.max(2) {
            best_regression_split(matrix, targets, &idx)
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| matrix.get(i, feature) <= threshold);
                let left = nodes.len();
                nodes.push(RegressionNode::Leaf { value: 0.0 });
                nodes.push(RegressionNode::Leaf { value: 0.0 });
                nodes[slot] = RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => {
                let g: f64 = idx.iter().map(|&i| targets[i]).sum();
                let h: f64 = idx.iter().map(|&i| hess[i]).sum();
                nodes[slot] = RegressionNode::Leaf {
                    value: g / h.max(1e-12),
                };
            }
        }
    }
    RegressionTree { nodes }
}

fn best_regression_split(
    matrix: &FeatureMatrix,
    targets: &[f64],
    idx: &[usize],
) -> Option<(usize, f64)> {
    let n = idx.len() as f64;
    let total: f64 = idx.iter().map(|&i| targets[i]).sum();
    let parent = total * total / n;
    let mut best: Option<(usize, f64, f64)> = None;
    let mut order = idx.to_vec();
    for f in 0..matrix.ncols() {
        order.sort_by(|&a, &b| matrix.get(a, f).total_cmp(&matrix.get(b, f)));
        let mut sum_l = 0.0;
        for w in 0..order.len() - 1 {
            sum_l += targets[order[w]];
            let (lo, hi) = (matrix.get(order[w], f), matrix.get(order[w + 1], f));
            if lo == hi {
                continue;
            }
            let nl = (w + 1) as f64;
            let sum_r = total - sum_l;
            let score = sum_l * sum_l / nl + sum_r * sum_r / (n - nl);
            if best.is_none_or(|b| score > b.2) {
                best = Some((f, midpoint(lo, hi), score));
            }
        }
    }
    let eps = 1e-12 * parent.abs().max(1e-12);
    best.filter(|b| b.2 > parent + eps).map(|(f, t, _)| (f, t))
}
