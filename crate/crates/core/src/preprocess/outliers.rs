use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::mean_std;
use crate::data_model::{Dataset, INDICATORS};
use crate::error::{Error, Result};

pub(crate) fn is_degenerate(mean: f64, std: f64) -> bool {
    !(std > 1e-12 * mean.abs().max(1.0))
}

/// Z-scores against the population mean and standard deviation.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    let (mean, std) = mean_std(values.iter().copied());
    if is_degenerate(mean, std) {
        return Err(Error::ZeroVariance("values".into()));
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// One mean/stddev over all years.
    #[default]
    Pooled,
    /// Separate mean/stddev per year.
    PerYear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierConfig {
    pub threshold: f64,
    /// Indicator names, see [`INDICATORS`].
    pub variables: Vec<String>,
    pub pooling: Pooling,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            threshold: 3.0,
            variables: vec!["wri".into(), "exposure".into()],
            pooling: Pooling::Pooled,
        }
    }
}

impl OutlierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidConfig("outlier threshold must be > 0".into()));
        }
        if self.variables.is_empty() {
            return Err(Error::InvalidConfig("no outlier variables".into()));
        }
        for v in &self.variables {
            canonical_indicator(v)?;
        }
        Ok(())
    }
}

/// Accepts canonical names (`lack_coping`) and the CSV display names
/// (`Lack of Coping Capabilities`), case-insensitively.
pub(crate) fn canonical_indicator(name: &str) -> Result<&'static str> {
    let n = name.trim().to_ascii_lowercase();
    let found = match n.as_str() {
        "lack of coping capabilities" => Some("lack_coping"),
        "lack of adaptive capacities" => Some("lack_adaptive"),
        _ => INDICATORS.iter().copied().find(|c| *c == n),
    };
    found.ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierEntry {
    pub country: String,
    pub year: i32,
    pub variable: String,
    pub zscore: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub threshold: f64,
    pub flagged: Vec<OutlierEntry>,
    pub distinct_countries: BTreeSet<String>,
}

impl OutlierReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["country", "year", "variable", "zscore"])?;
        for e in &self.flagged {
            w.write_record([
                e.country.as_str(),
                &e.year.to_string(),
                &e.variable,
                &format!("{:.6}", e.zscore),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flag every (record, variable) whose |z| exceeds the threshold.
///
/// Flagged rows are only reported; nothing is removed from the dataset.
pub fn detect_outliers(dataset: &Dataset, config: &OutlierConfig) -> Result<OutlierReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let records = dataset.records();
    let mut flagged = Vec::new();
    for var in &config.variables {
        let var = canonical_indicator(var)?;
        let values: Vec<f64> = records
            .iter()
            .map(|r| r.indicator(var).expect("canonical name"))
            .collect();
        let z = match config.pooling {
            Pooling::Pooled => zscore(&values).map_err(|_| Error::ZeroVariance(var.into()))?,
            Pooling::PerYear => {
                let mut z = vec![0.0; values.len()];
                for &year in dataset.years() {
                    let idx: Vec<usize> = (0..records.len())
                        .filter(|&i| records[i].year == year)
                        .collect();
                    let vals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
                    let zy = zscore(&vals)
                        .map_err(|_| Error::ZeroVariance(format!("{var} in {year}")))?;
                    for (i, v) in idx.into_iter().zip(zy) {
                        z[i] = v;
                    }
                }
                z
            }
        };
        for (r, zi) in records.iter().zip(z) {
            if zi.abs() > config.threshold {
                flagged.push(OutlierEntry {
                    country: r.country.clone(),
                    year: r.year,
                    variable: var.to_string(),
                    zscore: zi,
                });
            }
        }
    }
    flagged
        .sort_by(|a, b| (&a.country, a.year, &a.variable).cmp(&(&b.country, b.year, &b.variable)));
    let distinct_countries = flagged.iter().map(|e| e.country.clone()).collect();
    Ok(OutlierReport {
        threshold: config.threshold,
        flagged,
        distinct_countries,
    })
}
