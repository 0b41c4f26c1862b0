//! Temporal disaster-risk cluster dynamics.
//!
//! Ingests country-year risk indicators, flags outliers, clusters countries
//! with k-means, refines the clusters by label spreading, predicts cluster
//! membership over 1/3/5-year temporal splits, and estimates cluster
//! stay/shift probabilities.

pub mod charts;
pub mod classifiers;
pub mod clustering;
pub mod data_model;
pub mod error;
pub mod evaluation;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod scenario;
pub mod spreading;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use matrix::{FeatureMatrix, RowKey};
