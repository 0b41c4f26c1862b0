//! Panel-data schema: country-year records, CSV ingestion and temporal splits.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six numeric indicators, in the fixed feature order.
pub const INDICATORS: [&str; 6] = [
    "wri",
    "exposure",
    "vulnerability",
    "susceptibility",
    "lack_coping",
    "lack_adaptive",
];

/// The four categorical labels, in encoding order.
pub const CATEGORIES: [&str; 4] = [
    "exposure_cat",
    "wri_cat",
    "vulnerability_cat",
    "susceptibility_cat",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryYearRecord {
    pub country: String,
    pub region: String,
    pub year: i32,
    pub wri: f64,
    pub exposure: f64,
    pub vulnerability: f64,
    pub susceptibility: f64,
    pub lack_coping: f64,
    pub lack_adaptive: f64,
    pub exposure_cat: String,
    pub wri_cat: String,
    pub vulnerability_cat: String,
    pub susceptibility_cat: String,
}

impl CountryYearRecord {
    /// Numeric indicator by its canonical name (see [`INDICATORS`]).
    pub fn indicator(&self, name: &str) -> Option<f64> {
        Some(match name {
            "wri" => self.wri,
            "exposure" => self.exposure,
            "vulnerability" => self.vulnerability,
            "susceptibility" => self.susceptibility,
            "lack_coping" => self.lack_coping,
            "lack_adaptive" => self.lack_adaptive,
            _ => return None,
        })
    }

    /// Categorical label by its canonical name (see [`CATEGORIES`]), or `"region"`.
    pub fn category(&self, name: &str) -> Option<&str> {
        Some(match name {
            "region" => &self.region,
            "exposure_cat" => &self.exposure_cat,
            "wri_cat" => &self.wri_cat,
            "vulnerability_cat" => &self.vulnerability_cat,
            "susceptibility_cat" => &self.susceptibility_cat,
            _ => return None,
        })
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.country.trim().is_empty() {
            return Err("empty country".into());
        }
        for (name, v) in INDICATORS.iter().zip(record_features(self)) {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
            if v < 0.0 {
                return Err(format!("{name} is negative ({v})"));
            }
        }
        Ok(())
    }
}

/// The six indicators as a feature vector: wri, exposure, vulnerability,
/// susceptibility, lack_coping, lack_adaptive.
pub fn record_features(record: &CountryYearRecord) -> [f64; 6] {
    [
        record.wri,
        record.exposure,
        record.vulnerability,
        record.susceptibility,
        record.lack_coping,
        record.lack_adaptive,
    ]
}

/// Records sorted by (country, year), unique on that key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    records: Vec<CountryYearRecord>,
    years: Vec<i32>,
    countries: Vec<String>,
}

impl Dataset {
    pub fn from_records(mut records: Vec<CountryYearRecord>) -> Result<Self> {
        records.sort_by(|a, b| (&a.country, a.year).cmp(&(&b.country, b.year)));
        for w in records.windows(2) {
            if w[0].country == w[1].country && w[0].year == w[1].year {
                return Err(Error::DuplicateKey {
                    country: w[0].country.clone(),
                    year: w[0].year,
                });
            }
        }
        let years: BTreeSet<i32> = records.iter().map(|r| r.year).collect();
        let mut countries: Vec<String> = records.iter().map(|r| r.country.clone()).collect();
        countries.dedup();
        Ok(Self {
            records,
            years: years.into_iter().collect(),
            countries,
        })
    }

    pub fn records(&self) -> &[CountryYearRecord] {
        &self.records
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn filter(&self, mut keep: impl FnMut(&CountryYearRecord) -> bool) -> Dataset {
        let records: Vec<_> = self.records.iter().filter(|r| keep(r)).cloned().collect();
        Dataset::from_records(records).expect("subset of a valid dataset is valid")
    }

    /// Write the dataset back out as CSV under the given column names.
    pub fn write_csv<W: Write>(&self, writer: W, columns: &ColumnMap) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let shared_country = columns.country == columns.region;
        let mut header: Vec<&str> = Vec::new();
        if !shared_country {
            header.push(&columns.country);
        }
        header.extend([
            columns.region.as_str(),
            &columns.wri,
            &columns.exposure,
            &columns.vulnerability,
            &columns.susceptibility,
            &columns.lack_coping,
            &columns.lack_adaptive,
            &columns.year,
            &columns.exposure_cat,
            &columns.wri_cat,
            &columns.vulnerability_cat,
            &columns.susceptibility_cat,
        ]);
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            if !shared_country {
                row.push(r.country.clone());
            }
            row.push(if shared_country {
                r.country.clone()
            } else {
                r.region.clone()
            });
            row.extend(record_features(r).iter().map(|v| v.to_string()));
            row.push(r.year.to_string());
            row.extend([
                r.exposure_cat.clone(),
                r.wri_cat.clone(),
                r.vulnerability_cat.clone(),
                r.susceptibility_cat.clone(),
            ]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Header names for each field of the input CSV.
///
/// The public Kaggle export labels the country name column `Region`, so by
/// default both `country` and `region` read from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub country: String,
    pub region: String,
    pub wri: String,
    pub exposure: String,
    pub vulnerability: String,
    pub susceptibility: String,
    pub lack_coping: String,
    pub lack_adaptive: String,
    pub year: String,
    pub exposure_cat: String,
    pub wri_cat: String,
    pub vulnerability_cat: String,
    pub susceptibility_cat: String,
    /// Inclusive accepted year range; rows outside it are rejected.
    pub year_range: (i32, i32),
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            country: "Region".into(),
            region: "Region".into(),
            wri: "WRI".into(),
            exposure: "Exposure".into(),
            vulnerability: "Vulnerability".into(),
            susceptibility: "Susceptibility".into(),
            lack_coping: "Lack of Coping Capabilities".into(),
            lack_adaptive: "Lack of Adaptive Capacities".into(),
            year: "Year".into(),
            exposure_cat: "Exposure Category".into(),
            wri_cat: "WRI Category".into(),
            vulnerability_cat: "Vulnerability Category".into(),
            susceptibility_cat: "Susceptibility Category".into(),
            year_range: (2011, 2021),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the file, header being line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RejectionReport {
    pub rows: Vec<RejectedRow>,
}

impl RejectionReport {
    pub fn count(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub rejected: RejectionReport,
}

pub fn load_dataset(path: &Path, columns: &ColumnMap) -> Result<LoadedDataset> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_dataset(file, columns)
}

/// Parse a dataset from any CSV reader.
pub fn read_dataset<R: Read>(reader: R, columns: &ColumnMap) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ix = ColumnIndex {
        country: col(&columns.country)?,
        region: col(&columns.region)?,
        numeric: [
            col(&columns.wri)?,
            col(&columns.exposure)?,
            col(&columns.vulnerability)?,
            col(&columns.susceptibility)?,
            col(&columns.lack_coping)?,
            col(&columns.lack_adaptive)?,
        ],
        year: col(&columns.year)?,
        cats: [
            col(&columns.exposure_cat)?,
            col(&columns.wri_cat)?,
            col(&columns.vulnerability_cat)?,
            col(&columns.susceptibility_cat)?,
        ],
    };

    let mut records = Vec::new();
    let mut rejected = RejectionReport::default();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row?;
        match parse_row(&row, &ix, columns) {
            Ok(rec) => {
                if !seen.insert((rec.country.clone(), rec.year)) {
                    return Err(Error::DuplicateKey {
                        country: rec.country,
                        year: rec.year,
                    });
                }
                records.push(rec);
            }
            Err(reason) => rejected.rows.push(RejectedRow { line, reason }),
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(LoadedDataset {
        dataset: Dataset::from_records(records)?,
        rejected,
    })
}

struct ColumnIndex {
    country: usize,
    region: usize,
    numeric: [usize; 6],
    year: usize,
    cats: [usize; 4],
}

fn parse_row(
    row: &csv::StringRecord,
    ix: &ColumnIndex,
    columns: &ColumnMap,
) -> std::result::Result<CountryYearRecord, String> {
    let field = |i: usize| row.get(i).unwrap_or("");
    let mut nums = [0.0; 6];
    for (k, &c) in ix.numeric.iter().enumerate() {
        let raw = field(c);
        if raw.is_empty() {
            return Err(format!("missing {}", INDICATORS[k]));
        }
        nums[k] = raw
            .parse::<f64>()
            .map_err(|_| format!("{} is not numeric: `{raw}`", INDICATORS[k]))?;
    }
    let raw_year = field(ix.year);
    let year_f: f64 = raw_year
        .parse()
        .map_err(|_| format!("year is not numeric: `{raw_year}`"))?;
    if year_f.fract() != 0.0 || !year_f.is_finite() {
        return Err(format!("year is not an integer: `{raw_year}`"));
    }
    let year = year_f as i32;
    let (lo, hi) = columns.year_range;
    if year < lo || year > hi {
        return Err(format!("year {year} outside [{lo}, {hi}]"));
    }
    let cat = |i: usize| {
        let v = field(i);
        if v.is_empty() {
            "Unknown".to_string()
        } else {
            v.to_string()
        }
    };
    let rec = CountryYearRecord {
        country: field(ix.country).to_string(),
        region: field(ix.region).to_string(),
        year,
        wri: nums[0],
        exposure: nums[1],
        vulnerability: nums[2],
        susceptibility: nums[3],
        lack_coping: nums[4],
        lack_adaptive: nums[5],
        exposure_cat: cat(ix.cats[0]),
        wri_cat: cat(ix.cats[1]),
        vulnerability_cat: cat(ix.cats[2]),
        susceptibility_cat: cat(ix.cats[3]),
    };
    rec.validate()?;
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Horizon {
    One,
    Three,
    Five,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::One, Horizon::Three, Horizon::Five];

    pub fn years(self) -> i32 {
        match self {
            Horizon::One => 1,
            Horizon::Three => 3,
            Horizon::Five => 5,
        }
    }

    pub fn from_years(y: u32) -> Option<Horizon> {
        match y {
            1 => Some(Horizon::One),
            3 => Some(Horizon::Three),
            5 => Some(Horizon::Five),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Horizon::One => "one",
            Horizon::Three => "three",
            Horizon::Five => "five",
        }
    }
}

/// Year predicates for a temporal train/test split.
///
/// Train rows have `year < train_before`; test rows have
/// `test_from <= year <= final_year`. Everything else is excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub horizon: Horizon,
    pub train_before: i32,
    pub test_from: i32,
    pub final_year: i32,
}

impl SplitSpec {
    /// Disjoint split ending at `final_year`: one → test = final year,
    /// three → last four years, five → last six years.
    pub fn new(horizon: Horizon, final_year: i32) -> Self {
        let cutoff = match horizon {
            Horizon::One => final_year,
            Horizon::Three => final_year - 3,
            Horizon::Five => final_year - 5,
        };
        Self {
            horizon,
            train_before: cutoff,
            test_from: cutoff,
            final_year,
        }
    }

    /// The published splits verbatim; the five-year split overlaps on the
    /// two years between `test_from` and `train_before`.
    pub fn paper_literal(horizon: Horizon, final_year: i32) -> Self {
        match horizon {
            Horizon::Five => Self {
                horizon,
                train_before: final_year - 3,
                test_from: final_year - 5,
                final_year,
            },
            h => Self::new(h, final_year),
        }
    }

    pub fn is_disjoint(&self) -> bool {
        self.train_before <= self.test_from
    }

    pub fn is_train(&self, year: i32) -> bool {
        year < self.train_before
    }

    pub fn is_test(&self, year: i32) -> bool {
        year >= self.test_from && year <= self.final_year
    }
}

pub fn temporal_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train = dataset.filter(|r| spec.is_train(r.year));
    let test = dataset.filter(|r| spec.is_test(r.year));
    if train.is_empty() {
        return Err(Error::EmptySplit { side: "train" });
    }
    if test.is_empty() {
        return Err(Error::EmptySplit { side: "test" });
    }
    Ok((train, test))
}
