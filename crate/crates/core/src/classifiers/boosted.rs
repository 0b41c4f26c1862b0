//! Gradient-boosted regression trees on the logistic loss.

use serde::{Deserialize, Serialize};

use super::tree::{grow_regression_tree, RegressionTree};
use super::{check_training_set, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub initial_log_odds: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl BoostedModel {
    pub fn n_rounds(&self) -> usize {
        self.trees.len()
    }

    /// Log-odds after the first `rounds` trees.
    pub fn staged_margin(&self, x: &[f64], rounds: usize) -> f64 {
        self.initial_log_odds
            + self
                .trees
                .iter()
                .take(rounds)
                .map(|t| self.learning_rate * t.predict_row(x))
                .sum::<f64>()
    }

    pub fn predict_proba_staged(&self, matrix: &FeatureMatrix, rounds: usize) -> Vec<f64> {
        matrix
            .rows_iter()
            .map(|x| sigmoid(self.staged_margin(x, rounds)))
            .collect()
    }

    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        self.predict_proba_staged(matrix, self.trees.len())
    }
}

pub fn train_boosted(
    matrix: &FeatureMatrix,
    labels: &[usize],
    config: &BoostConfig,
) -> Result<BoostedModel> {
    check_training_set(matrix, labels)?;
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
    }
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let rate = (pos / n).clamp(1e-12, 1.0 - 1e-12);
    let initial = (rate / (1.0 - rate)).ln();
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut margin = vec![initial; labels.len()];
    let mut trees = Vec::with_capacity(config.n_rounds);
    for _ in 0..config.n_rounds {
        let p: Vec<f64> = margin.iter().map(|&m| sigmoid(m)).collect();
        let residual: Vec<f64> = y.iter().zip(&p).map(|(y, p)| y - p).collect();
        let hess: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let tree = grow_regression_tree(
            matrix,
            &residual,
            &hess,
            config.max_depth,
            config.min_samples_split,
        );
        for (m, x) in margin.iter_mut().zip(matrix.rows_iter()) {
            *m += config.learning_rate * tree.predict_row(x);
        }
        trees.push(tree);
    }
    Ok(BoostedModel {
        initial_log_odds: initial,
        learning_rate: config.learning_rate,
        trees,
    })
}
