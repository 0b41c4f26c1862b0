use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BoostConfig, ForestConfig, LogisticConfig, Model, ModelKind, TreeConfig};
use crate::data_model::{temporal_split, Dataset, Horizon, SplitSpec};
use crate::error::{Error, Result};
use crate::evaluation::{auc, confusion, ConfusionMatrix2};
use crate::preprocess::{drop_constant_columns, Encoder, EncodingSpec, StandardizationParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfigs {
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub boosted: BoostConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub horizon: Horizon,
    pub model: ModelKind,
    pub confusion: ConfusionMatrix2,
    pub accuracy: f64,
    /// `None` when the test rows hold a single class.
    pub auc: Option<f64>,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub country: String,
    pub year: i32,
    pub truth: usize,
    pub predicted: usize,
    pub score: f64,
}

/// Everything fitted on the training rows before the model itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocessing {
    pub encoder: Encoder,
    pub retained_columns: Vec<String>,
    pub standardization: StandardizationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonOutcome {
    pub result: HorizonResult,
    pub split: SplitSpec,
    /// Test rows in dataset order.
    pub predictions: Vec<Prediction>,
    pub preprocessing: FittedPreprocessing,
    pub model: Model,
}

/// Split by year, fit encoding and scaling on the training rows only, train
/// `kind`, and score it on the test rows.
///
/// `labels` are the cluster targets aligned with `dataset.records()`.
pub fn run_horizon_experiment(
    dataset: &Dataset,
    split: &SplitSpec,
    kind: ModelKind,
    labels: &[usize],
    configs: &ClassifierConfigs,
    encoding: &EncodingSpec,
) -> Result<HorizonOutcome> {
    if labels.len() != dataset.len() {
        return Err(Error::LengthMismatch(dataset.len(), labels.len()));
    }
    let by_key: HashMap<(&str, i32), usize> = dataset
        .records()
        .iter()
        .zip(labels)
        .map(|(r, &l)| ((r.country.as_str(), r.year), l))
        .collect();
    let (train, test) = temporal_split(dataset, split)?;
    let target = |d: &Dataset| -> Vec<usize> {
        d.records()
            .iter()
            .map(|r| by_key[&(r.country.as_str(), r.year)])
            .collect()
    };
    let (y_train, y_test) = (target(&train), target(&test));

    let encoder = Encoder::fit(&train, encoding)?;
    let x_train_raw = encoder.transform(&train)?;
    let keep = drop_constant_columns(&x_train_raw);
    if keep.is_empty() {
        return Err(Error::ZeroVariance("all training columns".into()));
    }
    let x_train_raw = x_train_raw.select_columns(&keep);
    let standardization = StandardizationParams::fit(&x_train_raw)?;
    let x_train = standardization.apply(&x_train_raw)?;
    let x_test = standardization.apply(&encoder.transform(&test)?.select_columns(&keep))?;

    let model = Model::fit(kind, &x_train, &y_train, configs)?;
    let scores = model.predict_proba(&x_test);
    let predicted = model.predict(&x_test);
    let cm = confusion(&y_test, &predicted)?;
    let auc = match auc(&scores, &y_test) {
        Ok(a) => Some(a),
        Err(Error::OneClassOnly) => None,
        Err(e) => return Err(e),
    };
    let predictions = test
        .records()
        .iter()
        .zip(&y_test)
        .zip(predicted.iter().zip(&scores))
        .map(|((r, &truth), (&p, &s))| Prediction {
            country: r.country.clone(),
            year: r.year,
            truth,
            predicted: p,
            score: s,
        })
        .collect();
    Ok(HorizonOutcome {
        result: HorizonResult {
            horizon: split.horizon,
            model: kind,
            accuracy: cm.accuracy(),
            confusion: cm,
            auc,
            train_size: train.len(),
            test_size: test.len(),
        },
        split: *split,
        predictions,
        preprocessing: FittedPreprocessing {
            retained_columns: x_train_raw.column_names().to_vec(),
            encoder,
            standardization,
        },
        model,
    })
}

/// `horizon,model,c00,c01,c10,c11,auc,accuracy`; a missing AUC is left empty.
pub fn write_table2<W: Write>(results: &[HorizonResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "horizon", "model", "c00", "c01", "c10", "c11", "auc", "accuracy",
    ])?;
    for r in results {
        let c = &r.confusion;
        w.write_record([
            r.horizon.years().to_string(),
            r.model.name().to_string(),
            c.c00.to_string(),
            c.c01.to_string(),
            c.c10.to_string(),
            c.c11.to_string(),
            r.auc.map(|a| format!("{a:.6}")).unwrap_or_default(),
            format!("{:.6}", r.accuracy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::tests::rec;
    use crate::data_model::CountryYearRecord;

    fn panel() -> (Dataset, Vec<usize>) {
        let mut v = Vec::new();
        for c in 0..12 {
            for y in 2011..=2021 {
                let high = c < 5;
                let w = if high { 20.0 } else { 5.0 } + c as f64 * 0.3 + (y - 2011) as f64 * 0.05;
                v.push(CountryYearRecord {
                    region: if c % 2 == 0 { "Asia" } else { "Africa" }.into(),
                    susceptibility: if high { 40.0 } else { 15.0 } + (c as f64 * 0.7).sin(),
                    ..rec(&format!("C{c:02}"), y, w)
                });
            }
        }
        let ds = Dataset::from_records(v).unwrap();
        let labels = ds
            .records()
            .iter()
            .map(|r| usize::from(r.wri < 12.0))
            .collect();
        (ds, labels)
    }

    #[test]
    fn every_model_separates_the_panel() {
        let (ds, labels) = panel();
        for kind in ModelKind::ALL {
            for h in Horizon::ALL {
                let out = run_horizon_experiment(
                    &ds,
                    &SplitSpec::new(h, 2021),
                    kind,
                    &labels,
                    &ClassifierConfigs::default(),
                    &EncodingSpec::default(),
                )
                .unwrap();
                assert_eq!(out.result.test_size as u64, out.result.confusion.total());
                assert_eq!(out.result.accuracy, 1.0, "{kind:?} {h:?}");
            }
        }
    }

    #[test]
    fn scaling_uses_training_rows_only() {
        let (ds, labels) = panel();
        let split = SplitSpec::new(Horizon::Three, 2021);
        let out = run_horizon_experiment(
            &ds,
            &split,
            ModelKind::Lr,
            &labels,
            &ClassifierConfigs::default(),
            &EncodingSpec::default(),
        )
        .unwrap();
        let train: Vec<f64> = ds
            .records()
            .iter()
            .filter(|r| split.is_train(r.year))
            .map(|r| r.wri)
            .collect();
        let mean = train.iter().sum::<f64>() / train.len() as f64;
        let wri = out
            .preprocessing
            .retained_columns
            .iter()
            .position(|c| c == "wri")
            .unwrap();
        assert!((out.preprocessing.standardization.means[wri] - mean).abs() < 1e-12);
        let year = out
            .preprocessing
            .retained_columns
            .iter()
            .position(|c| c == "year")
            .unwrap();
        assert_eq!(out.preprocessing.standardization.means[year], 2014.0);
    }

    #[test]
    fn empty_test_split_is_error() {
        let (ds, labels) = panel();
        let split = SplitSpec::new(Horizon::One, 2030);
        let r = run_horizon_experiment(
            &ds,
            &SplitSpec {
                test_from: 2030,
                ..split
            },
            ModelKind::Dt,
            &labels,
            &ClassifierConfigs::default(),
            &EncodingSpec::default(),
        );
        assert!(matches!(r, Err(Error::EmptySplit { side: "test" })));
    }

    #[test]
    fn table2_format() {
        let r = HorizonResult {
            horizon: Horizon::One,
            model: ModelKind::Lr,
            confusion: ConfusionMatrix2 {
                c00: 67,
                c01: 0,
                c10: 0,
                c11: 114,
            },
            accuracy: 1.0,
            auc: Some(1.0),
            train_size: 1810,
            test_size: 181,
        };
        let mut buf = Vec::new();
        write_table2(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "horizon,model,c00,c01,c10,c11,auc,accuracy\n1,lr,67,0,0,114,1.000000,1.000000\n"
        );
    }
}
