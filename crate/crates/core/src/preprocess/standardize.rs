use serde::{Deserialize, Serialize};

use super::mean_std;
use super::outliers::is_degenerate;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Per-column population mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(matrix: &FeatureMatrix) -> Result<Self> {
        let d = matrix.ncols();
        let mut means = Vec::with_capacity(d);
        let mut stds = Vec::with_capacity(d);
        for j in 0..d {
            let (m, s) = mean_std((0..matrix.nrows()).map(|i| matrix.get(i, j)));
            if matrix.nrows() == 0 || is_degenerate(m, s) {
                return Err(Error::ZeroVariance(matrix.column_names()[j].clone()));
            }
            means.push(m);
            stds.push(s);
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check(matrix)?;
        let d = matrix.ncols();
        let data = matrix
            .data()
            .iter()
            .enumerate()
            .map(|(k, &x)| (x - self.means[k % d]) / self.stds[k % d])
            .collect();
        Ok(matrix.with_data(data))
    }

    pub fn inverse(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check(matrix)?;
        let d = matrix.ncols();
        let data = matrix
            .data()
            .iter()
            .enumerate()
            .map(|(k, &z)| z * self.stds[k % d] + self.means[k % d])
            .collect();
        Ok(matrix.with_data(data))
    }

    fn check(&self, matrix: &FeatureMatrix) -> Result<()> {
        if matrix.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: matrix.ncols(),
            });
        }
        Ok(())
    }
}

/// Scale every column to zero mean and unit population variance.
pub fn standardize(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, StandardizationParams)> {
    let params = StandardizationParams::fit(matrix)?;
    let out = params.apply(matrix)?;
    Ok((out, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn two_point_column() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![10.0]]).unwrap();
        let (z, _) = standardize(&m).unwrap();
        assert_eq!(z.data(), &[-1.0, 1.0]);
    }

    #[test]
    fn stored_params_reproduce_bit_for_bit() {
        let m = random_matrix(20, 6, 1);
        let (z, p) = standardize(&m).unwrap();
        assert_eq!(p.apply(&m).unwrap(), z);
    }

    #[test]
    fn random_columns_centered_and_scaled() {
        let m = random_matrix(20, 6, 2);
        let (z, _) = standardize(&m).unwrap();
        for j in 0..6 {
            let (mean, std) = mean_std(z.column(j).into_iter());
            assert!(mean.abs() < 1e-12, "col {j} mean {mean}");
            assert!((std - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = random_matrix(15, 4, 3);
        let (z, p) = standardize(&m).unwrap();
        let back = p.inverse(&z).unwrap();
        for (a, b) in back.data().iter().zip(m.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_column_is_named_in_error() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0]]).unwrap();
        match standardize(&m) {
            Err(Error::ZeroVariance(c)) => assert_eq!(c, "x1"),
            other => panic!("{other:?}"),
        }
    }
}
