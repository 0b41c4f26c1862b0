//! K-means over country-year feature vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::silhouette;
use crate::matrix::{sq_dist, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Clusters are relabeled by descending centroid value in this column.
    pub canonical_column: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            n_restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            seed: 42,
            canonical_column: 0,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n_restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "k, n_restarts and max_iter must be positive".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations_run: usize,
    pub converged: bool,
    /// `canonical_order[new_id] = id before relabeling`.
    pub canonical_order: Vec<usize>,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
    pub restart: usize,
    pub config: KMeansConfig,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Recompute inertia from scratch.
    pub fn recompute_inertia(&self, matrix: &FeatureMatrix) -> f64 {
        matrix
            .rows_iter()
            .zip(&self.assignments)
            .map(|(x, &c)| sq_dist(x, &self.centroids[c]))
            .sum()
    }
}

/// Nearest centroid by squared Euclidean distance; ties go to the lower id.
fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = sq_dist(x, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub fn assign(model: &ClusterModel, matrix: &FeatureMatrix) -> Result<Vec<usize>> {
    let d = model.centroids.first().map_or(0, Vec::len);
    if matrix.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: matrix.ncols(),
        });
    }
    Ok(matrix
        .rows_iter()
        .map(|x| nearest(x, &model.centroids).0)
        .collect())
}

fn plus_plus_init(matrix: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = matrix.nrows();
    let mut centroids = vec![matrix.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = matrix
        .rows_iter()
        .map(|x| sq_dist(x, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = matrix.row(next).to_vec();
        for (di, x) in d2.iter_mut().zip(matrix.rows_iter()) {
            *di = di.min(sq_dist(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

struct Run {
    centroids: Vec<Vec<f64>>,
    assignments: Vec<usize>,
    inertia: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn lloyd(matrix: &FeatureMatrix, config: &KMeansConfig, restart: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let (n, d, k) = (matrix.nrows(), matrix.ncols(), config.k);
    let mut centroids = plus_plus_init(matrix, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        iterations += 1;
        let mut inertia = 0.0;
        for (i, x) in matrix.rows_iter().enumerate() {
            let (c, dd) = nearest(x, &centroids);
            assignments[i] = c;
            inertia += dd;
        }
        history.push(inertia);

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in matrix.rows_iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &cnt), old)| {
                if cnt == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / cnt as f64).collect()
                }
            })
            .collect();
        // empty clusters restart at the point farthest from its centroid
        let mut taken = Vec::new();
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .filter(|i| !taken.contains(i))
                .map(|i| (i, sq_dist(matrix.row(i), &updated[assignments[i]])))
                .fold(
                    (usize::MAX, -1.0),
                    |b, (i, dd)| if dd > b.1 { (i, dd) } else { b },
                );
            if far.0 != usize::MAX {
                updated[c] = matrix.row(far.0).to_vec();
                taken.push(far.0);
            }
        }
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < config.tol {
            converged = true;
            break;
        }
    }

    let mut inertia = 0.0;
    for (i, x) in matrix.rows_iter().enumerate() {
        let (c, dd) = nearest(x, &centroids);
        assignments[i] = c;
        inertia += dd;
    }
    history.push(inertia);
    Run {
        centroids,
        assignments,
        inertia,
        iterations,
        converged,
        history,
    }
}

/// Lloyd iterations from k-means++ seeding, best of `n_restarts` by inertia
/// (ties go to the lower restart index), clusters relabeled in canonical
/// order.
pub fn kmeans_fit(matrix: &FeatureMatrix, config: &KMeansConfig) -> Result<ClusterModel> {
    config.validate()?;
    if matrix.nrows() < config.k {
        return Err(Error::TooFewRows {
            needed: config.k,
            got: matrix.nrows(),
        });
    }
    if config.canonical_column >= matrix.ncols().max(1) {
        return Err(Error::InvalidConfig(format!(
            "canonical_column {} out of range",
            config.canonical_column
        )));
    }
    let runs: Vec<Run> = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| lloyd(matrix, config, r))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("n_restarts > 0");

    let col = config.canonical_column;
    let mut order: Vec<usize> = (0..config.k).collect();
    order.sort_by(|&a, &b| {
        best.centroids[b][col]
            .total_cmp(&best.centroids[a][col])
            .then(a.cmp(&b))
    });
    let mut relabel = vec![0; config.k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    Ok(ClusterModel {
        centroids: order.iter().map(|&o| best.centroids[o].clone()).collect(),
        assignments: best.assignments.iter().map(|&a| relabel[a]).collect(),
        inertia: best.inertia,
        iterations_run: best.iterations,
        converged: best.converged,
        canonical_order: order,
        inertia_history: best.history,
        restart,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// (k, silhouette) for every k tried.
    pub table: Vec<(usize, f64)>,
}

/// Pick the k with the highest silhouette; ties go to the smaller k.
pub fn select_k(
    matrix: &FeatureMatrix,
    k_range: std::ops::RangeInclusive<usize>,
    base: &KMeansConfig,
) -> Result<KSelection> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi < lo || hi + 1 > matrix.nrows() {
        return Err(Error::InvalidConfig(format!(
            "k range [{lo}, {hi}] must lie within [2, {}]",
            matrix.nrows().saturating_sub(1)
        )));
    }
    let mut table = Vec::new();
    for k in k_range {
        let model = kmeans_fit(matrix, &KMeansConfig { k, ..base.clone() })?;
        table.push((k, silhouette(matrix, &model.assignments)?));
    }
    let best = table
        .iter()
        .fold(table[0], |b, &row| if row.1 > b.1 { row } else { b });
    Ok(KSelection { k: best.0, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                rows.push(vec![
                    c[0] + rng.random_range(-spread..spread),
                    c[1] + rng.random_range(-spread..spread),
                ]);
            }
        }
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn k_one_is_column_means() {
        let m = blobs(&[[0.0, 0.0], [5.0, 1.0]], 10, 1.0, 3);
        let model = kmeans_fit(
            &m,
            &KMeansConfig {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let n = m.nrows() as f64;
        let mut total = 0.0;
        for j in 0..2 {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / n;
            assert!((model.centroids[0][j] - mean).abs() < 1e-12);
            total += col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        }
        assert!((model.inertia - total * n).abs() < 1e-9);
    }

    #[test]
    fn two_tight_groups_split_perfectly() {
        let m = FeatureMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.5, 0.0],
            vec![0.0, 0.5],
            vec![100.0, 100.0],
            vec![100.5, 100.0],
            vec![100.0, 100.5],
        ])
        .unwrap();
        let model = kmeans_fit(&m, &KMeansConfig::default()).unwrap();
        // canonical: cluster 0 has the larger first coordinate
        assert_eq!(model.assignments, vec![1, 1, 1, 0, 0, 0]);
        // within-group scatter, brute force over the two labelings
        let scatter = |idx: &[usize]| {
            let c: Vec<f64> = (0..2)
                .map(|j| idx.iter().map(|&i| m.get(i, j)).sum::<f64>() / idx.len() as f64)
                .collect();
            idx.iter().map(|&i| sq_dist(m.row(i), &c)).sum::<f64>()
        };
        let want = scatter(&[0, 1, 2]) + scatter(&[3, 4, 5]);
        assert!((model.inertia - want).abs() < 1e-9);
        assert!((model.recompute_inertia(&m) - model.inertia).abs() < 1e-12);
    }

    #[test]
    fn assign_exact_match_and_tie() {
        let model = ClusterModel {
            centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            assignments: vec![],
            inertia: 0.0,
            iterations_run: 0,
            converged: true,
            canonical_order: vec![0, 1],
            inertia_history: vec![],
            restart: 0,
            config: KMeansConfig::default(),
        };
        let m = FeatureMatrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(assign(&model, &m).unwrap(), vec![1, 0]);
        let bad = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(
            assign(&model, &bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn assign_on_training_matrix_reproduces_assignments() {
        let m = blobs(&[[0.0, 0.0], [4.0, 4.0], [0.0, 6.0]], 15, 1.5, 9);
        let model = kmeans_fit(
            &m,
            &KMeansConfig {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(assign(&model, &m).unwrap(), model.assignments);
    }

    #[test]
    fn too_few_rows() {
        let m = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(
            kmeans_fit(&m, &KMeansConfig::default()),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn empty_clusters_are_reseeded() {
        // 3 distinct points, k = 3, plus duplicates: every cluster stays non-empty
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![0.0], vec![0.0], vec![1.0], vec![5.0]])
            .unwrap();
        let model = kmeans_fit(
            &m,
            &KMeansConfig {
                k: 3,
                n_restarts: 4,
                ..Default::default()
            },
        )
        .unwrap();
        for c in 0..3 {
            assert!(model.assignments.contains(&c));
        }
    }

    #[test]
    fn select_k_finds_blob_count() {
        let three = blobs(&[[0.0, 0.0], [20.0, 0.0], [10.0, 18.0]], 20, 1.0, 1);
        assert_eq!(
            select_k(&three, 2..=5, &KMeansConfig::default()).unwrap().k,
            3
        );
        let two = blobs(&[[0.0, 0.0], [20.0, 0.0]], 20, 1.0, 2);
        assert_eq!(
            select_k(&two, 2..=4, &KMeansConfig::default()).unwrap().k,
            2
        );
        let one_row = select_k(&two, 2..=2, &KMeansConfig::default()).unwrap();
        assert_eq!((one_row.k, one_row.table.len()), (2, 1));
        assert!(select_k(&two, 1..=3, &KMeansConfig::default()).is_err());
    }
}
