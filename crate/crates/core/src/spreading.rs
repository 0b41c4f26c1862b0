//! Semi-supervised label spreading over a k-nearest-neighbour graph.
//!
//! The graph has binary weights and is symmetrized by union. With
//! `S = D^-1/2 W D^-1/2` and one-hot seed matrix `Y`, the scores iterate
//! `F <- alpha * S * F + (1 - alpha) * Y` from `F = Y` until the largest
//! entry change drops below `tol`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{auc, confusion, ConfusionMatrix2};
use crate::matrix::{sq_dist, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpreadConfig {
    pub n_neighbors: usize,
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub hide_fraction: f64,
    pub seed: u64,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 7,
            alpha: 0.2,
            max_iter: 1000,
            tol: 1e-6,
            hide_fraction: 0.5,
            seed: 42,
        }
    }
}

impl SpreadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if self.n_neighbors == 0 {
            return Err(Error::InvalidConfig("n_neighbors must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.hide_fraction) {
            return Err(Error::InvalidConfig(
                "hide_fraction must lie in [0, 1)".into(),
            ));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "tol and max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Symmetric binary adjacency stored as sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffinityGraph {
    neighbors: Vec<Vec<usize>>,
}

impl AffinityGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: a.max(b) + 1,
                });
            }
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if self.neighbors[i].binary_search(&j).is_ok() {
            1.0
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.weight(i, j)).collect())
            .collect()
    }

    /// Connected component id per node, numbered in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = next;
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Each row linked to its `n_neighbors` nearest rows (distance ties go to the
/// lower row index), then symmetrized by union.
pub fn build_knn_graph(matrix: &FeatureMatrix, n_neighbors: usize) -> Result<AffinityGraph> {
    let n = matrix.nrows();
    if n <= n_neighbors {
        return Err(Error::TooFewRows {
            needed: n_neighbors + 1,
            got: n,
        });
    }
    let knn: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = matrix.row(i);
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(xi, matrix.row(j)), j))
                .collect();
            d.select_nth_unstable_by(n_neighbors - 1, |a, b| {
                a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
            });
            d.truncate(n_neighbors);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    let edges: Vec<(usize, usize)> = knn
        .iter()
        .enumerate()
        .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
        .collect();
    AffinityGraph::from_edges(n, &edges)
}

/// Hide exactly `round(fraction * n)` labels chosen uniformly by `seed`,
/// re-drawing until every class keeps at least one visible label.
pub fn hide_labels(labels: &[usize], fraction: f64, seed: u64) -> Result<Vec<Option<usize>>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(
            "hide fraction must lie in [0, 1)".into(),
        ));
    }
    let n = labels.len();
    let n_hide = (fraction * n as f64).round() as usize;
    if n_hide == 0 {
        return Ok(labels.iter().map(|&l| Some(l)).collect());
    }
    let classes = {
        let mut c = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    if n - n_hide < classes.len() {
        return Err(Error::AllHidden);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for _attempt in 0..1000 {
        idx.shuffle(&mut rng);
        let mut out: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
        for &i in &idx[..n_hide] {
            out[i] = None;
        }
        let all_visible = classes.iter().all(|c| out.iter().any(|o| *o == Some(*c)));
        if all_visible {
            return Ok(out);
        }
    }
    Err(Error::AllHidden)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransductionResult {
    /// n × c score matrix.
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Largest entry change in the final iteration.
    pub residual: f64,
    pub hidden_mask: Vec<bool>,
}

pub fn spread(
    graph: &AffinityGraph,
    partial: &[Option<usize>],
    config: &SpreadConfig,
) -> Result<TransductionResult> {
    config.validate()?;
    let n = graph.len();
    if partial.len() != n {
        return Err(Error::LengthMismatch(n, partial.len()));
    }
    let n_classes = partial
        .iter()
        .flatten()
        .max()
        .map(|m| m + 1)
        .ok_or(Error::NoVisibleLabels)?;

    let inv_sqrt_deg: Vec<f64> = graph
        .degrees()
        .into_iter()
        .map(|d| if d > 0 { 1.0 / (d as f64).sqrt() } else { 0.0 })
        .collect();
    let seed: Vec<Vec<f64>> = partial
        .iter()
        .map(|p| {
            let mut row = vec![0.0; n_classes];
            if let Some(c) = p {
                row[*c] = 1.0;
            }
            row
        })
        .collect();

    let alpha = config.alpha;
    let mut f = seed.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    while iterations < config.max_iter {
        iterations += 1;
        let next: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; n_classes];
                for &j in graph.neighbors(i) {
                    let s = inv_sqrt_deg[i] * inv_sqrt_deg[j];
                    for (r, fj) in row.iter_mut().zip(&f[j]) {
                        *r += s * fj;
                    }
                }
                row.iter_mut()
                    .zip(&seed[i])
                    .for_each(|(r, y)| *r = alpha * *r + (1.0 - alpha) * y);
                row
            })
            .collect();
        residual = f
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        f = next;
        if residual < config.tol {
            converged = true;
            break;
        }
    }
    let labels = f.iter().map(|row| argmax(row)).collect();
    Ok(TransductionResult {
        scores: f,
        labels,
        iterations_run: iterations,
        converged,
        residual,
        hidden_mask: partial.iter().map(Option::is_none).collect(),
    })
}

/// Index of the largest entry; ties go to the lower index.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Agreement of spread labels with the original labels on hidden rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadEvaluation {
    pub hidden_rows: usize,
    pub confusion: ConfusionMatrix2,
    pub accuracy: f64,
    /// `None` when the hidden rows hold a single class.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transduction {
    pub result: TransductionResult,
    /// Only for two-class labels with at least one hidden row.
    pub evaluation: Option<SpreadEvaluation>,
}

/// Build the graph, hide labels, spread, and score the hidden rows.
pub fn transduce_full(
    matrix: &FeatureMatrix,
    labels: &[usize],
    config: &SpreadConfig,
) -> Result<Transduction> {
    config.validate()?;
    if labels.len() != matrix.nrows() {
        return Err(Error::LengthMismatch(matrix.nrows(), labels.len()));
    }
    let graph = build_knn_graph(matrix, config.n_neighbors)?;
    let partial = hide_labels(labels, config.hide_fraction, config.seed)?;
    let result = spread(&graph, &partial, config)?;
    let evaluation = evaluate_hidden(&result, labels)?;
    Ok(Transduction { result, evaluation })
}

pub fn evaluate_hidden(
    result: &TransductionResult,
    truth: &[usize],
) -> Result<Option<SpreadEvaluation>> {
    let binary =
        truth.iter().all(|&l| l <= 1) && result.scores.first().is_some_and(|r| r.len() == 2);
    let hidden: Vec<usize> = (0..truth.len())
        .filter(|&i| result.hidden_mask[i])
        .collect();
    if !binary || hidden.is_empty() {
        return Ok(None);
    }
    let t: Vec<usize> = hidden.iter().map(|&i| truth[i]).collect();
    let p: Vec<usize> = hidden.iter().map(|&i| result.labels[i]).collect();
    let s: Vec<f64> = hidden.iter().map(|&i| result.scores[i][1]).collect();
    let cm = confusion(&t, &p)?;
    let auc = match auc(&s, &t) {
        Ok(a) => Some(a),
        Err(Error::OneClassOnly) => None,
        Err(e) => return Err(e),
    };
    Ok(Some(SpreadEvaluation {
        hidden_rows: hidden.len(),
        accuracy: cm.accuracy(),
        confusion: cm,
        auc,
    }))
}
