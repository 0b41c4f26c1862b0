//! Cluster stay/shift probabilities over each horizon.
//!
//! A country's starting cluster is its spread label in the last training
//! year; its end cluster is the classifier's prediction for the last test
//! year. The probability of moving from cluster `a` to `b` is the share of
//! countries starting in `a` that end in `b`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifiers::{HorizonOutcome, ModelKind};
use crate::data_model::{Dataset, Horizon};
use crate::error::{Error, Result};
use crate::matrix::RowKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryTransition {
    pub country: String,
    pub start_year: i32,
    pub start: usize,
    pub end_year: i32,
    pub end: usize,
}

/// `(migrated / total, migrated, total)` over countries starting in `from`.
pub fn transition_probability(
    transitions: &[CountryTransition],
    from: usize,
    to: usize,
) -> Result<(f64, u64, u64)> {
    let source: Vec<&CountryTransition> = transitions.iter().filter(|t| t.start == from).collect();
    let total = source.len() as u64;
    if total == 0 {
        return Err(Error::EmptySourceCluster(from));
    }
    let migrated = source.iter().filter(|t| t.end == to).count() as u64;
    Ok((migrated as f64 / total as f64, migrated, total))
}

/// Pair each country's anchor label (last training year) with its predicted
/// label in the last test year. Countries missing either side are skipped.
pub fn country_transitions(
    dataset: &Dataset,
    anchor_labels: &[usize],
    outcome: &HorizonOutcome,
) -> Result<Vec<CountryTransition>> {
    if anchor_labels.len() != dataset.len() {
        return Err(Error::LengthMismatch(dataset.len(), anchor_labels.len()));
    }
    let mut start: BTreeMap<&str, (i32, usize)> = BTreeMap::new();
    for (r, &l) in dataset.records().iter().zip(anchor_labels) {
        if outcome.split.is_train(r.year) {
            let e = start.entry(&r.country).or_insert((r.year, l));
            if r.year >= e.0 {
                *e = (r.year, l);
            }
        }
    }
    let mut end: BTreeMap<&str, (i32, usize)> = BTreeMap::new();
    for p in &outcome.predictions {
        let e = end.entry(&p.country).or_insert((p.year, p.predicted));
        if p.year >= e.0 {
            *e = (p.year, p.predicted);
        }
    }
    Ok(start
        .into_iter()
        .filter_map(|(c, (sy, s))| {
            end.get(c).map(|&(ey, e)| CountryTransition {
                country: c.to_string(),
                start_year: sy,
                start: s,
                end_year: ey,
                end: e,
            })
        })
        .collect())
}

/// k × k transition counts and probabilities for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub totals: Vec<u64>,
    /// `None` for source clusters with no countries.
    pub probabilities: Vec<Vec<Option<f64>>>,
}

impl TransitionMatrix {
    pub fn from_pairs(k: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut counts = vec![vec![0u64; k]; k];
        for (a, b) in pairs {
            if a >= k || b >= k {
                return Err(Error::InvalidConfig(format!(
                    "cluster id {} out of range for k = {k}",
                    a.max(b)
                )));
            }
            counts[a][b] += 1;
        }
        let totals: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let probabilities = counts
            .iter()
            .zip(&totals)
            .map(|(row, &t)| {
                row.iter()
                    .map(|&c| (t > 0).then(|| c as f64 / t as f64))
                    .collect()
            })
            .collect();
        Ok(Self {
            counts,
            totals,
            probabilities,
        })
    }

    pub fn probability(&self, from: usize, to: usize) -> Option<f64> {
        self.probabilities[from][to]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearBreakdown {
    pub year: i32,
    pub matrix: TransitionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonTransitions {
    pub horizon: Horizon,
    pub model: ModelKind,
    pub matrix: TransitionMatrix,
    pub transitions: Vec<CountryTransition>,
    /// Anchor label against the prediction in each individual test year.
    pub per_year: Vec<YearBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub k: usize,
    pub horizons: Vec<HorizonTransitions>,
}

impl TransitionReport {
    pub fn horizon(&self, h: Horizon) -> Option<&HorizonTransitions> {
        self.horizons.iter().find(|t| t.horizon == h)
    }

    /// `horizon,from,to,probability,migrated,total`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["horizon", "from", "to", "probability", "migrated", "total"])?;
        for h in &self.horizons {
            for from in 0..self.k {
                for to in 0..self.k {
                    w.write_record([
                        h.horizon.years().to_string(),
                        from.to_string(),
                        to.to_string(),
                        h.matrix.probabilities[from][to]
                            .map(|p| format!("{p:.6}"))
                            .unwrap_or_default(),
                        h.matrix.counts[from][to].to_string(),
                        h.matrix.totals[from].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Transition matrices for every horizon outcome supplied (one per horizon,
/// normally from the same model family).
pub fn build_transition_report(
    dataset: &Dataset,
    anchor_labels: &[usize],
    outcomes: &[&HorizonOutcome],
    k: usize,
) -> Result<TransitionReport> {
    let mut horizons = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let transitions = country_transitions(dataset, anchor_labels, outcome)?;
        let matrix = TransitionMatrix::from_pairs(k, transitions.iter().map(|t| (t.start, t.end)))?;
        let start: HashMap<&str, usize> = transitions
            .iter()
            .map(|t| (t.country.as_str(), t.start))
            .collect();
        let mut by_year: BTreeMap<i32, Vec<(usize, usize)>> = BTreeMap::new();
        for p in &outcome.predictions {
            if let Some(&s) = start.get(p.country.as_str()) {
                by_year.entry(p.year).or_default().push((s, p.predicted));
            }
        }
        let per_year = by_year
            .into_iter()
            .map(|(year, pairs)| {
                Ok(YearBreakdown {
                    year,
                    matrix: TransitionMatrix::from_pairs(k, pairs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        horizons.push(HorizonTransitions {
            horizon: outcome.result.horizon,
            model: outcome.result.model,
            matrix,
            transitions,
            per_year,
        });
    }
    horizons.sort_by_key(|h| h.horizon);
    Ok(TransitionReport { k, horizons })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryTrajectory {
    pub country: String,
    /// (year, cluster) with strictly increasing years.
    pub points: Vec<(i32, usize)>,
}

/// Per-country cluster history; every dataset row must have an assignment.
pub fn country_trajectories(
    dataset: &Dataset,
    assignments: &HashMap<RowKey, usize>,
) -> Result<Vec<CountryTrajectory>> {
    let mut out: Vec<CountryTrajectory> = Vec::new();
    for r in dataset.records() {
        let key = RowKey::new(r.country.clone(), r.year);
        let c = *assignments
            .get(&key)
            .ok_or_else(|| Error::MissingAssignment {
                country: r.country.clone(),
                year: r.year,
            })?;
        match out.last_mut() {
            Some(t) if t.country == r.country => t.points.push((r.year, c)),
            _ => out.push(CountryTrajectory {
                country: r.country.clone(),
                points: vec![(r.year, c)],
            }),
        }
    }
    Ok(out)
}
