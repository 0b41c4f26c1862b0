//! Outlier detection, standardization, categorical encoding and PCA.

mod encode;
mod outliers;
mod pca;
mod standardize;

pub use encode::{drop_constant_columns, encode_features, Encoder, EncodingSpec};
pub use outliers::{detect_outliers, zscore, OutlierConfig, OutlierEntry, OutlierReport, Pooling};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use standardize::{standardize, StandardizationParams};

/// Fixed-order mean and population standard deviation.
pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in values.clone() {
        sum += v;
        n += 1;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / n as f64).sqrt())
}
