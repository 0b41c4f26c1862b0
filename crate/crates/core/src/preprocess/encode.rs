use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::mean_std;
use super::outliers::is_degenerate;
use crate::data_model::{record_features, Dataset, CATEGORIES, INDICATORS};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, RowKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingSpec {
    pub include_year: bool,
    pub include_region: bool,
    pub include_categories: bool,
    /// Fail on categories unseen at fit time instead of encoding all-zeros.
    pub strict: bool,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            include_year: true,
            include_region: true,
            include_categories: true,
            strict: false,
        }
    }
}

impl EncodingSpec {
    /// The six numeric indicators only.
    pub fn numeric_only() -> Self {
        Self {
            include_year: false,
            include_region: false,
            include_categories: false,
            strict: false,
        }
    }

    fn groups(&self) -> Vec<&'static str> {
        let mut g = Vec::new();
        if self.include_region {
            g.push("region");
        }
        if self.include_categories {
            g.extend(CATEGORIES);
        }
        g
    }
}

/// One-hot levels learned from a fitting dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub spec: EncodingSpec,
    /// (group, sorted levels) in column order.
    pub levels: Vec<(String, Vec<String>)>,
}

impl Encoder {
    pub fn fit(dataset: &Dataset, spec: &EncodingSpec) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let levels = spec
            .groups()
            .into_iter()
            .map(|g| {
                let set: BTreeSet<&str> = dataset
                    .records()
                    .iter()
                    .map(|r| r.category(g).expect("known group"))
                    .collect();
                (g.to_string(), set.into_iter().map(str::to_string).collect())
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            levels,
        })
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = INDICATORS.iter().map(|s| s.to_string()).collect();
        if self.spec.include_year {
            names.push("year".into());
        }
        for (g, lv) in &self.levels {
            names.extend(lv.iter().map(|v| format!("{g}={v}")));
        }
        names
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<FeatureMatrix> {
        let names = self.column_names();
        let d = names.len();
        let mut data = Vec::with_capacity(dataset.len() * d);
        let mut keys = Vec::with_capacity(dataset.len());
        for r in dataset.records() {
            data.extend(record_features(r));
            if self.spec.include_year {
                data.push(f64::from(r.year));
            }
            for (g, lv) in &self.levels {
                let v = r.category(g).expect("known group");
                let hit = lv.binary_search_by(|x| x.as_str().cmp(v)).ok();
                if hit.is_none() && self.spec.strict {
                    return Err(Error::UnknownCategory {
                        column: g.clone(),
                        value: v.to_string(),
                    });
                }
                data.extend((0..lv.len()).map(|k| if Some(k) == hit { 1.0 } else { 0.0 }));
            }
            keys.push(RowKey::new(r.country.clone(), r.year));
        }
        FeatureMatrix::new(dataset.len(), d, data, keys, names)
    }
}

/// Fit an encoder on `dataset` and encode it.
pub fn encode_features(dataset: &Dataset, spec: &EncodingSpec) -> Result<FeatureMatrix> {
    Encoder::fit(dataset, spec)?.transform(dataset)
}

/// Indices of columns with non-degenerate variance.
pub fn drop_constant_columns(matrix: &FeatureMatrix) -> Vec<usize> {
    (0..matrix.ncols())
        .filter(|&j| {
            let (m, s) = mean_std((0..matrix.nrows()).map(|i| matrix.get(i, j)));
            !is_degenerate(m, s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::tests::rec;
    use crate::data_model::CountryYearRecord;

    #[test]
    fn two_regions_two_exclusive_columns() {
        let a = CountryYearRecord {
            region: "Asia".into(),
            ..rec("A", 2011, 1.0)
        };
        let b = CountryYearRecord {
            region: "Oceania".into(),
            ..rec("B", 2011, 2.0)
        };
        let ds = Dataset::from_records(vec![a, b]).unwrap();
        let spec = EncodingSpec {
            include_categories: false,
            ..EncodingSpec::default()
        };
        let m = encode_features(&ds, &spec).unwrap();
        let asia = m.column_index("region=Asia").unwrap();
        let oce = m.column_index("region=Oceania").unwrap();
        assert_eq!(m.ncols(), 6 + 1 + 2);
        assert_eq!((m.get(0, asia), m.get(0, oce)), (1.0, 0.0));
        assert_eq!((m.get(1, asia), m.get(1, oce)), (0.0, 1.0));
        assert_eq!(m.get(0, 6), 2011.0);
    }

    #[test]
    fn wri_categories_in_sorted_order_and_rows_partition() {
        let cats = ["Medium", "High", "Low", "High"];
        let ds = Dataset::from_records(
            cats.iter()
                .enumerate()
                .map(|(i, c)| CountryYearRecord {
                    wri_cat: c.to_string(),
                    ..rec(&format!("C{i}"), 2012, i as f64)
                })
                .collect(),
        )
        .unwrap();
        let enc = Encoder::fit(&ds, &EncodingSpec::default()).unwrap();
        let m = enc.transform(&ds).unwrap();
        let wri_cols: Vec<&String> = m
            .column_names()
            .iter()
            .filter(|c| c.starts_with("wri_cat="))
            .collect();
        assert_eq!(wri_cols, ["wri_cat=High", "wri_cat=Low", "wri_cat=Medium"]);
        for (g, lv) in &enc.levels {
            let cols: Vec<usize> = lv
                .iter()
                .map(|v| m.column_index(&format!("{g}={v}")).unwrap())
                .collect();
            for i in 0..m.nrows() {
                let s: f64 = cols.iter().map(|&j| m.get(i, j)).sum();
                assert_eq!(s, 1.0, "group {g} row {i}");
            }
        }
    }

    #[test]
    fn unseen_category_all_zeros_or_strict_error() {
        let train = Dataset::from_records(vec![rec("A", 2011, 1.0)]).unwrap();
        let test = Dataset::from_records(vec![CountryYearRecord {
            wri_cat: "Very High".into(),
            ..rec("A", 2012, 1.0)
        }])
        .unwrap();
        let enc = Encoder::fit(&train, &EncodingSpec::default()).unwrap();
        let m = enc.transform(&test).unwrap();
        assert_eq!(m.get(0, m.column_index("wri_cat=Low").unwrap()), 0.0);
        let strict = Encoder::fit(
            &train,
            &EncodingSpec {
                strict: true,
                ..EncodingSpec::default()
            },
        )
        .unwrap();
        assert!(matches!(
            strict.transform(&test),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn numeric_only_has_six_columns() {
        let ds = Dataset::from_records(vec![rec("A", 2011, 1.0)]).unwrap();
        let m = encode_features(&ds, &EncodingSpec::numeric_only()).unwrap();
        assert_eq!(m.column_names(), INDICATORS.map(String::from));
    }
}
