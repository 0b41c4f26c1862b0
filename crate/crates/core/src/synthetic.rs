//! Deterministic synthetic country-year panels for demos and tests.
//!
//! Countries fall into a high-risk and a low-risk group with stable
//! indicator levels, small yearly noise and a slight upward exposure trend.
//! Optionally a few low-risk countries drift into the high-risk range and a
//! few high-risk countries get an extreme exposure level. Values are rounded to two decimals like the public index exports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data_model::{CountryYearRecord, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_countries: usize,
    /// Share of countries placed in the high-risk group.
    pub high_risk_share: f64,
    pub first_year: i32,
    pub last_year: i32,
    /// Standard deviation of the yearly noise, relative to each level.
    pub noise: f64,
    /// Low-risk countries whose indicators drift into the high-risk range.
    pub movers: usize,
    /// High-risk countries with an extreme exposure level.
    pub extremes: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_countries: 20,
            high_risk_share: 0.4,
            first_year: 2011,
            last_year: 2021,
            noise: 0.03,
            movers: 1,
            extremes: 1,
            seed: 7,
        }
    }
}

const REGIONS: [&str; 5] = ["Africa", "Americas", "Asia", "Europe", "Oceania"];

/// Five-band label used by the index exports.
fn category(value: f64, cuts: [f64; 4]) -> String {
    let labels = ["Very Low", "Low", "Medium", "High", "Very High"];
    let i = cuts.iter().take_while(|&&c| value >= c).count();
    labels[i].to_string()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn synthetic_panel(config: &SyntheticConfig) -> Result<Dataset> {
    if config.n_countries < 2 || config.first_year > config.last_year {
        return Err(Error::InvalidConfig(
            "synthetic panel needs at least 2 countries and a non-empty year range".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.high_risk_share) || !(config.noise >= 0.0) {
        return Err(Error::InvalidConfig(
            "share must be in [0, 1] and noise >= 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let n_high = ((config.n_countries as f64) * config.high_risk_share).round() as usize;
    let span = (config.last_year - config.first_year).max(1) as f64;
    let mut records = Vec::new();
    for c in 0..config.n_countries {
        let high = c < n_high;
        let country = format!("Country {:02}", c + 1);
        // Country-level base values: (exposure, susceptibility, lack_coping, lack_adaptive).
        let (mut exp0, sus0, cop0, ada0) = if high {
            (
                24.0 + 6.0 * unit.sample(&mut rng),
                34.0 + 3.0 * unit.sample(&mut rng),
                84.0 + 3.0 * unit.sample(&mut rng),
                58.0 + 3.0 * unit.sample(&mut rng),
            )
        } else {
            (
                7.0 + 1.5 * unit.sample(&mut rng),
                17.0 + 2.0 * unit.sample(&mut rng),
                56.0 + 4.0 * unit.sample(&mut rng),
                34.0 + 3.0 * unit.sample(&mut rng),
            )
        };
        if high && c < config.extremes {
            exp0 *= 3.0;
        }
        let mover = !high && c < n_high + config.movers;
        for (t, year) in (config.first_year..=config.last_year).enumerate() {
            let jitter = |rng: &mut ChaCha8Rng, level: f64| {
                (level * (1.0 + config.noise * unit.sample(rng))).max(0.01)
            };
            // Movers approach the high-risk levels quadratically in time.
            let drift = if mover {
                (t as f64 / span).powi(2)
            } else {
                0.0
            };
            let toward = |from: f64, to: f64| from + (to - from) * drift;
            let exposure = jitter(&mut rng, toward(exp0, 24.0) * (1.0 + 0.01 * t as f64));
            let susceptibility = jitter(&mut rng, toward(sus0, 34.0));
            let lack_coping = jitter(&mut rng, toward(cop0, 84.0)).min(100.0);
            let lack_adaptive = jitter(&mut rng, toward(ada0, 58.0)).min(100.0);
            let vulnerability = (susceptibility * lack_coping * lack_adaptive).cbrt();
            let wri = (exposure * vulnerability).sqrt();
            let (exposure, susceptibility, lack_coping, lack_adaptive, vulnerability, wri) = (
                round2(exposure),
                round2(susceptibility),
                round2(lack_coping),
                round2(lack_adaptive),
                round2(vulnerability),
                round2(wri),
            );
            records.push(CountryYearRecord {
                country: country.clone(),
                region: REGIONS[c % REGIONS.len()].to_string(),
                year,
                wri,
                exposure,
                vulnerability,
                susceptibility,
                lack_coping,
                lack_adaptive,
                exposure_cat: category(exposure, [5.0, 8.0, 12.0, 18.0]),
                wri_cat: category(wri, [3.5, 5.5, 7.5, 11.0]),
                vulnerability_cat: category(vulnerability, [32.0, 38.0, 45.0, 55.0]),
                susceptibility_cat: category(susceptibility, [15.0, 20.0, 26.0, 32.0]),
            });
        }
    }
    Dataset::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_panel_shape() {
        let ds = synthetic_panel(&SyntheticConfig::default()).unwrap();
        assert_eq!(ds.countries().len(), 20);
        assert_eq!(ds.years(), (2011..=2021).collect::<Vec<_>>().as_slice());
        assert_eq!(ds.len(), 220);
    }

    #[test]
    fn same_seed_same_panel() {
        let cfg = SyntheticConfig::default();
        assert_eq!(
            synthetic_panel(&cfg).unwrap(),
            synthetic_panel(&cfg).unwrap()
        );
        let other = SyntheticConfig {
            seed: 8,
            ..cfg.clone()
        };
        assert_ne!(
            synthetic_panel(&cfg).unwrap(),
            synthetic_panel(&other).unwrap()
        );
    }

    #[test]
    fn groups_are_separated() {
        let ds = synthetic_panel(&SyntheticConfig::default()).unwrap();
        let high_min = ds
            .records()
            .iter()
            .filter(|r| r.country.as_str() <= "Country 08")
            .map(|r| r.lack_coping)
            .fold(f64::INFINITY, f64::min);
        let low_max = ds
            .records()
            .iter()
            .filter(|r| r.country.as_str() > "Country 09")
            .map(|r| r.lack_coping)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(high_min > low_max, "{high_min} vs {low_max}");
    }

    #[test]
    fn categories_follow_cuts() {
        assert_eq!(category(1.0, [2.0, 3.0, 4.0, 5.0]), "Very Low");
        assert_eq!(category(3.0, [2.0, 3.0, 4.0, 5.0]), "Medium");
        assert_eq!(category(9.0, [2.0, 3.0, 4.0, 5.0]), "Very High");
    }
}
