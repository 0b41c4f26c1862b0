//! Random forest of bootstrap CART trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_training_set;
use super::tree::{grow_tree, TreeConfig, TreeModel};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))` candidate columns per split.
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
            MaxFeatures::All => d,
            MaxFeatures::Fixed(m) => m.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            tree: TreeConfig::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub features_per_split: usize,
    /// Rows drawn for each tree (equal to the training size).
    pub sample_size: usize,
    pub seed: u64,
}

impl ForestModel {
    /// Share of trees voting for class 1.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        let n = self.trees.len() as f64;
        matrix
            .rows_iter()
            .map(|x| self.trees.iter().filter(|t| t.predict_row(x) == 1).count() as f64 / n)
            .collect()
    }

    /// Majority vote; an even split goes to class 0.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Vec<usize> {
        self.predict_proba(matrix)
            .into_iter()
            .map(|p| usize::from(p > 0.5))
            .collect()
    }
}

pub fn train_forest(
    matrix: &FeatureMatrix,
    labels: &[usize],
    config: &ForestConfig,
) -> Result<ForestModel> {
    check_training_set(matrix, labels)?;
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be positive".into()));
    }
    let n = matrix.nrows();
    let m = config.max_features.resolve(matrix.ncols());
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let samples: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(matrix, labels, &samples, &config.tree, Some((m, &mut rng)))
        })
        .collect();
    Ok(ForestModel {
        trees,
        features_per_split: m,
        sample_size: n,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tree::train_tree;
    use super::*;

    fn data() -> (FeatureMatrix, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 3.0, (t * 0.11).cos() * 2.0, t % 7.0]
            })
            .collect();
        let y = rows
            .iter()
            .map(|r| usize::from(r[0] + 0.5 * r[2] > 1.5))
            .collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn single_tree_without_bootstrap_is_cart() {
        let (x, y) = data();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let f = train_forest(&x, &y, &cfg).unwrap();
        let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        assert_eq!(f.trees[0].nodes, t.nodes);
        assert_eq!(f.predict(&x), t.predict(&x));
    }

    #[test]
    fn deterministic_and_fits_training_data() {
        let (x, y) = data();
        let a = train_forest(&x, &y, &ForestConfig::default()).unwrap();
        let b = train_forest(&x, &y, &ForestConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 100);
        assert_eq!(a.sample_size, 40);
        assert_eq!(a.features_per_split, 2);
        assert_eq!(a.predict(&x), y);
    }

    #[test]
    fn sqrt_rule() {
        assert_eq!(MaxFeatures::Sqrt.resolve(200), 15);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Fixed(50).resolve(4), 4);
    }
}
