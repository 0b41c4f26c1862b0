//! Dense row-major feature matrix with row and column identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a matrix row: the (country, year) it was derived from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub country: String,
    pub year: i32,
}

impl RowKey {
    pub fn new(country: impl Into<String>, year: i32) -> Self {
        Self {
            country: country.into(),
            year,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    row_keys: Vec<RowKey>,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        row_keys: Vec<RowKey>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if row_keys.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: row_keys.len(),
            });
        }
        if column_names.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: column_names.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            data,
            row_keys,
            column_names,
        })
    }

    /// Build an anonymous matrix from row vectors. Row keys are `("row<i>", 0)`
    /// and columns are named `x0..x{d-1}`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        let keys = (0..n).map(|i| RowKey::new(format!("row{i}"), 0)).collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Self::new(n, d, data, keys, names)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row_keys(&self) -> &[RowKey] {
        &self.row_keys
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        let mut keys = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(self.row(i));
            keys.push(self.row_keys[i].clone());
        }
        FeatureMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
            row_keys: keys,
            column_names: self.column_names.clone(),
        }
    }

    /// New matrix holding the given columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(idx.iter().map(|&j| r[j]));
        }
        FeatureMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
            row_keys: self.row_keys.clone(),
            column_names: idx.iter().map(|&j| self.column_names[j].clone()).collect(),
        }
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> FeatureMatrix {
        debug_assert_eq!(data.len(), self.data.len());
        FeatureMatrix {
            data,
            ..self.clone()
        }
    }

    pub fn to_row_vecs(&self) -> Vec<Vec<f64>> {
        self.rows_iter().map(<[f64]>::to_vec).collect()
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(FeatureMatrix::new(2, 2, vec![0.0; 3], vec![], vec![]).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn select_rows_and_columns() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let c = m.select_columns(&[2, 0]);
        assert_eq!(c.row(1), &[6.0, 4.0]);
        assert_eq!(c.column_names(), &["x2", "x0"]);
        let r = m.select_rows(&[1, 1, 0]);
        assert_eq!(r.nrows(), 3);
        assert_eq!(r.row(2), &[1.0, 2.0, 3.0]);
    }
}
