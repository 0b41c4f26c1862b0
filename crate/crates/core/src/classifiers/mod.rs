//! Supervised models predicting cluster membership, and the temporal
//! train/test experiment that evaluates them.

mod boosted;
mod experiment;
mod forest;
mod logistic;
mod tree;

use serde::{Deserialize, Serialize};

pub use boosted::{train_boosted, BoostConfig, BoostedModel};
pub use experiment::{
    run_horizon_experiment, write_table2, ClassifierConfigs, FittedPreprocessing, HorizonOutcome,
    HorizonResult, Prediction,
};
pub use forest::{train_forest, ForestConfig, ForestModel, MaxFeatures};
pub use logistic::{loss_and_gradient, train_logistic, LogisticConfig, LogisticModel};
pub use tree::{train_tree, Node, RegressionNode, RegressionTree, TreeConfig, TreeModel};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_training_set(matrix: &FeatureMatrix, labels: &[usize]) -> Result<()> {
    if matrix.nrows() != labels.len() {
        return Err(Error::LengthMismatch(matrix.nrows(), labels.len()));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::NonBinary(bad));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Dt,
    Rf,
    Gbt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Rf, ModelKind::Dt, ModelKind::Gbt, ModelKind::Lr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Gbt => "gbt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Some(ModelKind::Lr),
            "dt" => Some(ModelKind::Dt),
            "rf" => Some(ModelKind::Rf),
            "gbt" | "xgb" => Some(ModelKind::Gbt),
            _ => None,
        }
    }
}

/// Any fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Logistic(LogisticModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl Model {
    pub fn fit(
        kind: ModelKind,
        matrix: &FeatureMatrix,
        labels: &[usize],
        configs: &ClassifierConfigs,
    ) -> Result<Model> {
        Ok(match kind {
            ModelKind::Lr => Model::Logistic(train_logistic(matrix, labels, &configs.logistic)?),
            ModelKind::Dt => Model::Tree(train_tree(matrix, labels, &configs.tree)?),
            ModelKind::Rf => Model::Forest(train_forest(matrix, labels, &configs.forest)?),
            ModelKind::Gbt => Model::Boosted(train_boosted(matrix, labels, &configs.boosted)?),
        })
    }

    /// Positive-class score per row.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        match self {
            Model::Logistic(m) => m.predict_proba(matrix),
            Model::Tree(m) => m.predict_proba(matrix),
            Model::Forest(m) => m.predict_proba(matrix),
            Model::Boosted(m) => m.predict_proba(matrix),
        }
    }

    pub fn predict(&self, matrix: &FeatureMatrix) -> Vec<usize> {
        match self {
            Model::Tree(m) => m.predict(matrix),
            Model::Forest(m) => m.predict(matrix),
            Model::Logistic(_) | Model::Boosted(_) => self
                .predict_proba(matrix)
                .into_iter()
                .map(|p| usize::from(p >= 0.5))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_finite() {
        for z in [-800.0, -3.0, 0.0, 2.5, 800.0] {
            let s = sigmoid(z);
            assert!(s.is_finite());
            assert!((s + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn model_kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::parse(k.name()), Some(k));
        }
        assert_eq!(ModelKind::parse("XGB"), Some(ModelKind::Gbt));
        assert_eq!(ModelKind::parse("svm"), None);
    }
}
