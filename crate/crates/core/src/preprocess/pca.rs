use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, RowKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// n_components × n_features, rows orthonormal.
    pub components: Vec<Vec<f64>>,
    /// Population variance captured by each component, non-increasing.
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub column_means: Vec<f64>,
    pub total_variance: f64,
}

/// Principal directions from the SVD of the centered matrix.
///
/// Each component is sign-flipped so that its largest-magnitude entry is
/// positive.
pub fn pca_fit(matrix: &FeatureMatrix, n_components: usize) -> Result<PcaModel> {
    let (n, d) = (matrix.nrows(), matrix.ncols());
    if n_components == 0 || n < 2 || n_components > (n - 1).min(d) {
        return Err(Error::InvalidConfig(format!(
            "n_components = {n_components} must be in [1, min(rows - 1, cols)] for a {n}x{d} matrix"
        )));
    }
    let means: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| matrix.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| matrix.get(i, j) - means[j]);
    let total_variance = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;

    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not produce right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank_tol = s_max * (n.max(d) as f64) * f64::EPSILON;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rank_tol)
        .count();
    if n_components > rank {
        return Err(Error::RankDeficient {
            requested: n_components,
            rank,
        });
    }

    let mut components = Vec::with_capacity(n_components);
    let mut explained_variance = Vec::with_capacity(n_components);
    for &k in order.iter().take(n_components) {
        let mut c: Vec<f64> = v_t.row(k).iter().copied().collect();
        let pivot = c
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(c);
        let s = svd.singular_values[k];
        explained_variance.push(s * s / n as f64);
    }
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|v| {
            if total_variance > 0.0 {
                v / total_variance
            } else {
                0.0
            }
        })
        .collect();
    Ok(PcaModel {
        components,
        explained_variance,
        explained_variance_ratio,
        column_means: means,
        total_variance,
    })
}

/// Project centered rows onto the components. Columns are named `pc1..`.
pub fn pca_transform(model: &PcaModel, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let d = model.column_means.len();
    if matrix.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: matrix.ncols(),
        });
    }
    let k = model.components.len();
    let mut data = Vec::with_capacity(matrix.nrows() * k);
    for row in matrix.rows_iter() {
        for c in &model.components {
            data.push(
                row.iter()
                    .zip(&model.column_means)
                    .zip(c)
                    .map(|((x, m), w)| (x - m) * w)
                    .sum(),
            );
        }
    }
    let names = (1..=k).map(|i| format!("pc{i}")).collect();
    let keys: Vec<RowKey> = matrix.row_keys().to_vec();
    FeatureMatrix::new(matrix.nrows(), k, data, keys, names)
}

impl PcaModel {
    /// Map projected coordinates back to feature space.
    pub fn inverse_transform(&self, projected: &FeatureMatrix) -> Vec<Vec<f64>> {
        projected
            .rows_iter()
            .map(|z| {
                let mut x = self.column_means.clone();
                for (zk, c) in z.iter().zip(&self.components) {
                    for (xj, cj) in x.iter_mut().zip(c) {
                        *xj += zk * cj;
                    }
                }
                x
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi eigen-solver for a symmetric matrix; eigenpairs sorted
    /// by descending eigenvalue.
    fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = a.len();
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for row in v.iter_mut() {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
        let vals = idx.iter().map(|&k| a[k][k]).collect();
        let vecs = idx
            .iter()
            .map(|&k| (0..n).map(|i| v[i][k]).collect())
            .collect();
        (vals, vecs)
    }

    fn projector(basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = basis[0].len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| basis.iter().map(|b| b[i] * b[j]).sum())
                    .collect()
            })
            .collect()
    }

    fn random(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::from_rows(
            &(0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn collinear_points_single_component_explains_everything() {
        let m = FeatureMatrix::from_rows(
            &(0..8)
                .map(|i| vec![i as f64, 2.0 * i as f64])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let p = pca_fit(&m, 1).unwrap();
        assert!((p.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        let c = &p.components[0];
        assert!((c[1] - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            pca_fit(&m, 2),
            Err(Error::RankDeficient { rank: 1, .. })
        ));
    }

    #[test]
    fn full_rank_round_trip() {
        let m = random(10, 4, 7);
        let p = pca_fit(&m, 4).unwrap();
        let z = pca_transform(&p, &m).unwrap();
        let back = p.inverse_transform(&z);
        for (i, row) in back.iter().enumerate() {
            for (a, b) in row.iter().zip(m.row(i)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let captured: f64 = p.explained_variance.iter().sum();
        assert!((captured - p.total_variance).abs() < 1e-9);
    }

    #[test]
    fn components_orthonormal_and_variance_sorted() {
        let m = random(30, 6, 11);
        let p = pca_fit(&m, 5).unwrap();
        for (a, ca) in p.components.iter().enumerate() {
            for (b, cb) in p.components.iter().enumerate() {
                let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
            let pivot = ca
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(pivot > 0.0);
        }
        assert!(p.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matches_covariance_eigen_oracle() {
        let rows = vec![
            vec![2.5, 2.4, 0.5],
            vec![0.5, 0.7, 1.9],
            vec![2.2, 2.9, 1.1],
            vec![1.9, 2.2, 0.3],
            vec![3.1, 3.0, 2.2],
        ];
        let m = FeatureMatrix::from_rows(&rows).unwrap();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..3)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let cov: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                (0..3)
                    .map(|b| {
                        rows.iter()
                            .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                            .sum::<f64>()
                            / n
                    })
                    .collect()
            })
            .collect();
        let (vals, vecs) = jacobi_eigen(cov);
        for k in 1..=2 {
            let p = pca_fit(&m, k).unwrap();
            let (pa, pb) = (projector(&p.components), projector(&vecs[..k]));
            for i in 0..3 {
                for j in 0..3 {
                    assert!((pa[i][j] - pb[i][j]).abs() < 1e-8);
                }
            }
            for (ev, want) in p.explained_variance.iter().zip(&vals) {
                assert!((ev - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn too_many_components_rejected() {
        let m = random(3, 5, 1);
        assert!(pca_fit(&m, 3).is_err());
        assert!(pca_fit(&m, 2).is_ok());
    }
}
