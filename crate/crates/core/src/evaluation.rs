//! Clustering validity indices and binary classification metrics.
//!
//! All distances are Euclidean. Reductions run in a fixed order so results are
//! bitwise reproducible regardless of thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dist, FeatureMatrix};

/// Distinct labels in ascending order, with member indices.
fn groups(labels: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut sorted: Vec<usize> = labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for l in sorted {
        out.push((l, Vec::new()));
    }
    for (i, l) in labels.iter().enumerate() {
        let g = out.binary_search_by_key(l, |(k, _)| *k).expect("present");
        out[g].1.push(i);
    }
    out
}

fn check(matrix: &FeatureMatrix, labels: &[usize]) -> Result<Vec<(usize, Vec<usize>)>> {
    if matrix.nrows() != labels.len() {
        return Err(Error::LengthMismatch(matrix.nrows(), labels.len()));
    }
    let g = groups(labels);
    if g.len() < 2 {
        return Err(Error::SingleCluster);
    }
    Ok(g)
}

fn centroid(matrix: &FeatureMatrix, members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; matrix.ncols()];
    for &i in members {
        for (cj, x) in c.iter_mut().zip(matrix.row(i)) {
            *cj += x;
        }
    }
    let n = members.len() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette(matrix: &FeatureMatrix, labels: &[usize]) -> Result<f64> {
    let g = check(matrix, labels)?;
    let cluster_of: Vec<usize> = labels
        .iter()
        .map(|l| g.binary_search_by_key(l, |(k, _)| *k).expect("present"))
        .collect();
    let sizes: Vec<usize> = g.iter().map(|(_, m)| m.len()).collect();
    let n = matrix.nrows();
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = cluster_of[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; g.len()];
            let xi = matrix.row(i);
            for j in 0..n {
                if j != i {
                    sums[cluster_of[j]] += dist(xi, matrix.row(j));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..g.len())
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / n as f64)
}

/// Between-cluster over within-cluster dispersion, each normalized by its
/// degrees of freedom. Returns `+inf` when the within-cluster scatter is zero.
pub fn calinski_harabasz(matrix: &FeatureMatrix, labels: &[usize]) -> Result<f64> {
    let g = check(matrix, labels)?;
    let (n, k) = (matrix.nrows(), g.len());
    if k > n - 1 {
        return Err(Error::InvalidConfig(format!(
            "Calinski-Harabasz needs k <= n - 1, got k = {k}, n = {n}"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let overall = centroid(matrix, &all);
    let mut between = 0.0;
    let mut within = 0.0;
    for (_, members) in &g {
        let c = centroid(matrix, members);
        between += members.len() as f64 * crate::matrix::sq_dist(&c, &overall);
        for &i in members {
            within += crate::matrix::sq_dist(matrix.row(i), &c);
        }
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Mean over clusters of the worst-case similarity ratio. Returns `+inf`
/// when two centroids coincide.
pub fn davies_bouldin(matrix: &FeatureMatrix, labels: &[usize]) -> Result<f64> {
    let g = check(matrix, labels)?;
    let cents: Vec<Vec<f64>> = g.iter().map(|(_, m)| centroid(matrix, m)).collect();
    let spread: Vec<f64> = g
        .iter()
        .zip(&cents)
        .map(|((_, m), c)| m.iter().map(|&i| dist(matrix.row(i), c)).sum::<f64>() / m.len() as f64)
        .collect();
    let k = g.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = dist(&cents[i], &cents[j]);
            if d == 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max((spread[i] + spread[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterValidityReport {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
    /// Names of indices that hit a degenerate-geometry sentinel.
    pub degenerate: Vec<String>,
}

pub fn cluster_validity(matrix: &FeatureMatrix, labels: &[usize]) -> Result<ClusterValidityReport> {
    let silhouette = silhouette(matrix, labels)?;
    let calinski_harabasz = calinski_harabasz(matrix, labels)?;
    let davies_bouldin = davies_bouldin(matrix, labels)?;
    let mut degenerate = Vec::new();
    if calinski_harabasz.is_infinite() {
        degenerate.push("calinski_harabasz".into());
    }
    if davies_bouldin.is_infinite() {
        degenerate.push("davies_bouldin".into());
    }
    Ok(ClusterValidityReport {
        silhouette,
        calinski_harabasz,
        davies_bouldin,
        degenerate,
    })
}

/// 2×2 confusion matrix; `cij` counts rows of true class `i` predicted as `j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix2 {
    pub c00: u64,
    pub c01: u64,
    pub c10: u64,
    pub c11: u64,
}

impl ConfusionMatrix2 {
    pub fn total(&self) -> u64 {
        self.c00 + self.c01 + self.c10 + self.c11
    }

    pub fn as_array(&self) -> [[u64; 2]; 2] {
        [[self.c00, self.c01], [self.c10, self.c11]]
    }

    pub fn accuracy(&self) -> f64 {
        accuracy(self)
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize]) -> Result<ConfusionMatrix2> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch(truth.len(), predicted.len()));
    }
    let mut cm = ConfusionMatrix2::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (0, 0) => cm.c00 += 1,
            (0, 1) => cm.c01 += 1,
            (1, 0) => cm.c10 += 1,
            (1, 1) => cm.c11 += 1,
            (x, y) => return Err(Error::NonBinary(if x > 1 { x } else { y })),
        }
    }
    Ok(cm)
}

/// Fraction on the diagonal; 0 for an empty matrix.
pub fn accuracy(cm: &ConfusionMatrix2) -> f64 {
    let total = cm.total();
    if total == 0 {
        return 0.0;
    }
    (cm.c00 + cm.c11) as f64 / total as f64
}

/// Area under the ROC curve via the Mann-Whitney U statistic with midranks.
/// Label 1 is the positive class.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::NonBinary(bad));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OneClassOnly);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // ranks doubled so midranks stay integral
    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && scores[idx[end + 1]] == scores[idx[start]] {
            end += 1;
        }
        let mid2 = (start + 1 + end + 1) as u128;
        for &i in &idx[start..=end] {
            if labels[i] == 1 {
                rank_sum2 += mid2;
            }
        }
        start = end + 1;
    }
    let np = n_pos as u128;
    // 2U = 2R - np(np+1)
    let u2 = rank_sum2 - np * (np + 1);
    Ok((u2 as f64 * 0.5) / (n_pos as f64 * n_neg as f64))
}

/// Everything `metrics.json` reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
    /// Row-major `[[c00, c01], [c10, c11]]`, rows = true class.
    pub confusion: Option<[[u64; 2]; 2]>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
}
