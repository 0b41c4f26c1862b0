//! End-to-end run: load, outliers, standardize, k-means, label spreading,
//! per-horizon classification, transition report and charts.
//!
//! Every artifact is written to a temporary file and renamed into place.
//! JSON and CSV artifacts depend only on the input bytes and the config, so
//! two runs with the same seed produce identical files. The manifest also
//! records wall-clock timings and therefore differs between runs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charts::{emit_cluster_scatter, emit_temporal_chart};
use crate::classifiers::{
    write_table2, ClassifierConfigs, HorizonOutcome, HorizonResult, ModelKind,
};
use crate::clustering::{kmeans_fit, ClusterModel, KMeansConfig};
use crate::data_model::{load_dataset, ColumnMap, Dataset, Horizon, SplitSpec, INDICATORS};
use crate::error::{Error, Result};
use crate::evaluation::{cluster_validity, ClusterValidityReport, MetricsReport};
use crate::matrix::{FeatureMatrix, RowKey};
use crate::preprocess::{
    detect_outliers, encode_features, pca_fit, pca_transform, standardize, EncodingSpec,
    OutlierConfig, OutlierReport, StandardizationParams,
};
use crate::scenario::{build_transition_report, country_trajectories, TransitionReport};
use crate::spreading::{transduce_full, SpreadConfig, SpreadEvaluation};

/// How the five-year split is cut; see [`SplitSpec::paper_literal`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    #[default]
    Disjoint,
    Literal,
}

/// Full run configuration. Nested `seed` fields are overwritten by seeds
/// derived from the top-level `seed` and the stage name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub columns: ColumnMap,
    pub outliers: OutlierConfig,
    pub kmeans: KMeansConfig,
    pub spread: SpreadConfig,
    pub classifiers: ClassifierConfigs,
    pub encoding: EncodingSpec,
    /// Horizon lengths in years, each one of 1, 3, 5.
    pub horizons: Vec<u32>,
    pub models: Vec<ModelKind>,
    /// Model whose predictions feed the transition report.
    pub scenario_model: ModelKind,
    pub split_mode: SplitMode,
    /// Last test year; defaults to the latest year in the data.
    pub final_year: Option<i32>,
    /// Indicators drawn as temporal charts.
    pub charts: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("data/world_risk_index.csv"),
            output_dir: PathBuf::from("out"),
            seed: 42,
            columns: ColumnMap::default(),
            outliers: OutlierConfig::default(),
            kmeans: KMeansConfig::default(),
            spread: SpreadConfig::default(),
            classifiers: ClassifierConfigs::default(),
            encoding: EncodingSpec::default(),
            horizons: vec![1, 3, 5],
            models: ModelKind::ALL.to_vec(),
            scenario_model: ModelKind::Lr,
            split_mode: SplitMode::Disjoint,
            final_year: None,
            charts: INDICATORS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.outliers.validate()?;
        self.kmeans.validate()?;
        self.spread.validate()?;
        self.horizon_list()?;
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("no models selected".into()));
        }
        if !self.models.contains(&self.scenario_model) {
            return Err(Error::InvalidConfig(format!(
                "scenario model `{}` is not among the selected models",
                self.scenario_model.name()
            )));
        }
        for c in &self.charts {
            if !INDICATORS.contains(&c.as_str()) {
                return Err(Error::UnknownVariable(c.clone()));
            }
        }
        Ok(())
    }

    pub fn horizon_list(&self) -> Result<Vec<Horizon>> {
        if self.horizons.is_empty() {
            return Err(Error::InvalidConfig("no horizons selected".into()));
        }
        let mut out: Vec<Horizon> = self
            .horizons
            .iter()
            .map(|&y| {
                Horizon::from_years(y).ok_or_else(|| {
                    Error::InvalidConfig(format!("horizon must be 1, 3 or 5, got {y}"))
                })
            })
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Seed for one stage: the first eight bytes of SHA-256 over the
    /// top-level seed (little endian) followed by the stage name.
    pub fn derived_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    /// Copy of the config with every nested seed replaced by its derived seed.
    pub fn with_derived_seeds(&self) -> Self {
        let mut c = self.clone();
        c.kmeans.seed = derive_seed(self.seed, "kmeans");
        c.spread.seed = derive_seed(self.seed, "spread");
        c.classifiers.forest.seed = derive_seed(self.seed, "forest");
        c
    }

    fn split(&self, horizon: Horizon, final_year: i32) -> SplitSpec {
        match self.split_mode {
            SplitMode::Disjoint => SplitSpec::new(horizon, final_year),
            SplitMode::Literal => SplitSpec::paper_literal(horizon, final_year),
        }
    }
}

pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Write through a sibling temporary file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub countries: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub rejected_rows: usize,
    /// SHA-256 of the raw input file.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub stage: String,
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    /// Set when the run failed after this file was written.
    pub partial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub status: StageStatus,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub seeds: BTreeMap<String, u64>,
    pub fingerprint: Option<DatasetFingerprint>,
    pub artifacts: Vec<ArtifactEntry>,
    pub stages: Vec<StageTiming>,
    pub complete: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn artifact(&self, path: &str) -> Option<&ArtifactEntry> {
        self.artifacts.iter().find(|a| a.path == path)
    }
}

/// Stages in execution order.
pub const STAGES: [&str; 9] = [
    "load",
    "outliers",
    "standardize",
    "kmeans",
    "spread",
    "classify",
    "scenario",
    "metrics",
    "plot",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowAssignment {
    pub country: String,
    pub year: i32,
    pub cluster: usize,
}

/// Contents of `clusters.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub dataset_sha256: String,
    pub config: KMeansConfig,
    pub k: usize,
    pub feature_names: Vec<String>,
    /// Centroids in standardized units.
    pub centroids: Vec<Vec<f64>>,
    /// Centroids mapped back to the original indicator scale.
    pub centroids_original: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations_run: usize,
    pub converged: bool,
    pub restart: usize,
    pub cluster_sizes: Vec<usize>,
    pub validity: ClusterValidityReport,
    pub assignments: Vec<RowAssignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransductionRow {
    pub country: String,
    pub year: i32,
    pub kmeans: usize,
    pub label: usize,
    pub hidden: bool,
    pub scores: Vec<f64>,
}

/// Contents of `transduction.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransductionArtifact {
    pub dataset_sha256: String,
    pub kmeans_config: KMeansConfig,
    pub config: SpreadConfig,
    pub iterations_run: usize,
    pub converged: bool,
    pub residual: f64,
    pub evaluation: Option<SpreadEvaluation>,
    pub rows: Vec<TransductionRow>,
}

impl TransductionArtifact {
    /// Labels aligned with `dataset.records()`.
    pub fn labels_for(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        align(
            dataset,
            self.rows
                .iter()
                .map(|r| (RowKey::new(r.country.clone(), r.year), r.label)),
        )
    }
}

impl ClusterArtifact {
    pub fn labels_for(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        align(
            dataset,
            self.assignments
                .iter()
                .map(|r| (RowKey::new(r.country.clone(), r.year), r.cluster)),
        )
    }
}

fn align(dataset: &Dataset, pairs: impl Iterator<Item = (RowKey, usize)>) -> Result<Vec<usize>> {
    let map: HashMap<RowKey, usize> = pairs.collect();
    dataset
        .records()
        .iter()
        .map(|r| {
            map.get(&RowKey::new(r.country.clone(), r.year))
                .copied()
                .ok_or_else(|| Error::MissingAssignment {
                    country: r.country.clone(),
                    year: r.year,
                })
        })
        .collect()
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    /// Cluster validity of the k-means labels plus hidden-label scores of
    /// the spreading step.
    pub clustering: MetricsReport,
    pub classification: Vec<HorizonResult>,
}

/// Loaded input plus its fingerprint.
#[derive(Debug, Clone)]
pub struct Input {
    pub dataset: Dataset,
    pub fingerprint: DatasetFingerprint,
}

pub fn load_input(config: &PipelineConfig) -> Result<Input> {
    let loaded = load_dataset(&config.input, &config.columns)?;
    let bytes = fs::read(&config.input)?;
    let ds = loaded.dataset;
    let fingerprint = DatasetFingerprint {
        rows: ds.len(),
        countries: ds.countries().len(),
        first_year: *ds.years().first().expect("non-empty dataset"),
        last_year: *ds.years().last().expect("non-empty dataset"),
        rejected_rows: loaded.rejected.count(),
        sha256: sha256_hex(&bytes),
    };
    Ok(Input {
        dataset: ds,
        fingerprint,
    })
}

/// The six indicators standardized over all rows, used for clustering,
/// spreading and the scatter chart.
pub fn clustering_features(dataset: &Dataset) -> Result<(FeatureMatrix, StandardizationParams)> {
    standardize(&encode_features(dataset, &EncodingSpec::numeric_only())?)
}

pub fn cluster_stage(
    matrix: &FeatureMatrix,
    params: &StandardizationParams,
    config: &KMeansConfig,
    dataset_sha256: &str,
) -> Result<(ClusterModel, ClusterArtifact)> {
    let model = kmeans_fit(matrix, config)?;
    let validity = cluster_validity(matrix, &model.assignments)?;
    let mut sizes = vec![0; model.k()];
    for &a in &model.assignments {
        sizes[a] += 1;
    }
    let centroids_original = model
        .centroids
        .iter()
        .map(|c| {
            c.iter()
                .zip(params.means.iter().zip(&params.stds))
                .map(|(v, (m, s))| v * s + m)
                .collect()
        })
        .collect();
    let artifact = ClusterArtifact {
        dataset_sha256: dataset_sha256.to_string(),
        config: config.clone(),
        k: model.k(),
        feature_names: matrix.column_names().to_vec(),
        centroids: model.centroids.clone(),
        centroids_original,
        inertia: model.inertia,
        iterations_run: model.iterations_run,
        converged: model.converged,
        restart: model.restart,
        cluster_sizes: sizes,
        validity,
        assignments: matrix
            .row_keys()
            .iter()
            .zip(&model.assignments)
            .map(|(k, &c)| RowAssignment {
                country: k.country.clone(),
                year: k.year,
                cluster: c,
            })
            .collect(),
    };
    Ok((model, artifact))
}

pub fn spread_stage(
    matrix: &FeatureMatrix,
    kmeans_labels: &[usize],
    kmeans_config: &KMeansConfig,
    config: &SpreadConfig,
    dataset_sha256: &str,
) -> Result<TransductionArtifact> {
    let t = transduce_full(matrix, kmeans_labels, config)?;
    let rows = matrix
        .row_keys()
        .iter()
        .enumerate()
        .map(|(i, k)| TransductionRow {
            country: k.country.clone(),
            year: k.year,
            kmeans: kmeans_labels[i],
            label: t.result.labels[i],
            hidden: t.result.hidden_mask[i],
            scores: t.result.scores[i].clone(),
        })
        .collect();
    Ok(TransductionArtifact {
        dataset_sha256: dataset_sha256.to_string(),
        kmeans_config: kmeans_config.clone(),
        config: config.clone(),
        iterations_run: t.result.iterations_run,
        converged: t.result.converged,
        residual: t.result.residual,
        evaluation: t.evaluation,
        rows,
    })
}

/// Every (horizon, model) pair, run concurrently; results come back in
/// (horizon, model) order.
pub fn classify_stage(
    dataset: &Dataset,
    labels: &[usize],
    config: &PipelineConfig,
) -> Result<Vec<HorizonOutcome>> {
    let final_year = config
        .final_year
        .unwrap_or_else(|| *dataset.years().last().expect("non-empty dataset"));
    let jobs: Vec<(Horizon, ModelKind)> = config
        .horizon_list()?
        .into_iter()
        .flat_map(|h| config.models.iter().map(move |&m| (h, m)))
        .collect();
    jobs.par_iter()
        .map(|&(h, m)| {
            crate::classifiers::run_horizon_experiment(
                dataset,
                &config.split(h, final_year),
                m,
                labels,
                &config.classifiers,
                &config.encoding,
            )
        })
        .collect()
}

pub fn scenario_stage(
    dataset: &Dataset,
    anchor_labels: &[usize],
    outcomes: &[HorizonOutcome],
    model: ModelKind,
    k: usize,
) -> Result<TransitionReport> {
    let chosen: Vec<&HorizonOutcome> = outcomes
        .iter()
        .filter(|o| o.result.model == model)
        .collect();
    if chosen.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no predictions from model `{}`",
            model.name()
        )));
    }
    build_transition_report(dataset, anchor_labels, &chosen, k)
}

/// `country,year,cluster` for every row, from the spread labels.
pub fn trajectories_csv(dataset: &Dataset, labels: &[usize]) -> Result<Vec<u8>> {
    let map: HashMap<RowKey, usize> = dataset
        .records()
        .iter()
        .zip(labels)
        .map(|(r, &l)| (RowKey::new(r.country.clone(), r.year), l))
        .collect();
    let traj = country_trajectories(dataset, &map)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["country", "year", "cluster"])?;
    for t in &traj {
        for &(y, c) in &t.points {
            w.write_record([t.country.as_str(), &y.to_string(), &c.to_string()])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Temporal charts for the configured indicators plus the PCA scatter.
/// Returns (file name, svg) pairs.
pub fn plot_stage(
    dataset: &Dataset,
    matrix: &FeatureMatrix,
    labels: &[usize],
    variables: &[String],
) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for v in variables {
        out.push((format!("{v}.svg"), emit_temporal_chart(dataset, v)?));
    }
    let pca = pca_fit(matrix, 2)?;
    let projection = pca_transform(&pca, matrix)?;
    out.push((
        "clusters.svg".into(),
        emit_cluster_scatter(&projection, labels)?,
    ));
    Ok(out)
}

pub fn outlier_csv(report: &OutlierReport) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(buf)
}

/// Writes artifacts and keeps the manifest in step.
struct Recorder {
    out: PathBuf,
    manifest: RunManifest,
}

impl Recorder {
    fn write(&mut self, stage: &str, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.out.join(rel), bytes)?;
        self.manifest.artifacts.push(ArtifactEntry {
            stage: stage.to_string(),
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            partial: false,
        });
        Ok(())
    }

    fn timed<T>(
        &mut self,
        stage: &'static str,
        f: impl FnOnce(&mut Self) -> Result<T>,
    ) -> Result<T> {
        let start = Instant::now();
        let r = f(self);
        self.manifest.stages.push(StageTiming {
            stage: stage.to_string(),
            status: if r.is_ok() {
                StageStatus::Complete
            } else {
                StageStatus::Failed
            },
            seconds: start.elapsed().as_secs_f64(),
        });
        r.map_err(|e| e.at_stage(stage))
    }

    fn finish(mut self, result: Result<()>) -> Result<RunManifest> {
        if let Err(e) = &result {
            self.manifest.complete = false;
            self.manifest.error = Some(e.to_string());
            for a in &mut self.manifest.artifacts {
                a.partial = true;
            }
        } else {
            self.manifest.complete = true;
        }
        let bytes = to_json(&self.manifest)?;
        write_atomic(&self.out.join("manifest.json"), &bytes)?;
        result.map(|_| self.manifest)
    }
}

/// Run every stage and write all artifacts under `config.output_dir`.
///
/// On failure the manifest is still written, with the failed stage, the
/// error and every artifact written so far marked partial, and the error
/// is returned wrapped with its stage name.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest> {
    config.validate().map_err(|e| e.at_stage("config"))?;
    let cfg = config.with_derived_seeds();
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::from(e).at_stage("config"))?;
    let seeds = ["kmeans", "spread", "forest"]
        .iter()
        .map(|s| (s.to_string(), cfg.derived_seed(s)))
        .collect();
    let mut rec = Recorder {
        out: cfg.output_dir.clone(),
        manifest: RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds,
            fingerprint: None,
            artifacts: Vec::new(),
            stages: Vec::new(),
            complete: false,
            error: None,
        },
    };
    let result = run_stages(&cfg, &mut rec);
    rec.finish(result)
}

fn run_stages(cfg: &PipelineConfig, rec: &mut Recorder) -> Result<()> {
    let input = rec.timed("load", |_| load_input(cfg))?;
    rec.manifest.fingerprint = Some(input.fingerprint.clone());
    let ds = &input.dataset;
    let sha = input.fingerprint.sha256.as_str();

    rec.timed("outliers", |r| {
        let report = detect_outliers(ds, &cfg.outliers)?;
        r.write("outliers", "outliers.csv", &outlier_csv(&report)?)
    })?;

    let (matrix, params) = rec.timed("standardize", |_| clustering_features(ds))?;

    let (model, clusters) = rec.timed("kmeans", |r| {
        let (model, artifact) = cluster_stage(&matrix, &params, &cfg.kmeans, sha)?;
        r.write("kmeans", "clusters.json", &to_json(&artifact)?)?;
        Ok((model, artifact))
    })?;

    let transduction = rec.timed("spread", |r| {
        let t = spread_stage(&matrix, &model.assignments, &cfg.kmeans, &cfg.spread, sha)?;
        r.write("spread", "transduction.json", &to_json(&t)?)?;
        Ok(t)
    })?;
    let labels: Vec<usize> = transduction.rows.iter().map(|r| r.label).collect();

    let outcomes = rec.timed("classify", |r| {
        let outcomes = classify_stage(ds, &labels, cfg)?;
        let results: Vec<HorizonResult> = outcomes.iter().map(|o| o.result.clone()).collect();
        let mut buf = Vec::new();
        write_table2(&results, &mut buf)?;
        r.write("classify", "table2.csv", &buf)?;
        Ok(outcomes)
    })?;

    rec.timed("scenario", |r| {
        let report = scenario_stage(ds, &labels, &outcomes, cfg.scenario_model, model.k())?;
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        r.write("scenario", "table3.csv", &buf)?;
        r.write("scenario", "scenario.json", &to_json(&report)?)?;
        r.write(
            "scenario",
            "trajectories.csv",
            &trajectories_csv(ds, &labels)?,
        )
    })?;

    rec.timed("metrics", |r| {
        let ev = transduction.evaluation.as_ref();
        let metrics = PipelineMetrics {
            clustering: MetricsReport {
                silhouette: clusters.validity.silhouette,
                calinski_harabasz: clusters.validity.calinski_harabasz,
                davies_bouldin: clusters.validity.davies_bouldin,
                confusion: ev.map(|e| e.confusion.as_array()),
                accuracy: ev.map(|e| e.accuracy),
                auc: ev.and_then(|e| e.auc),
            },
            classification: outcomes.iter().map(|o| o.result.clone()).collect(),
        };
        r.write("metrics", "metrics.json", &to_json(&metrics)?)
    })?;

    rec.timed("plot", |r| {
        for (name, svg) in plot_stage(ds, &matrix, &labels, &cfg.charts)? {
            r.write("plot", &format!("charts/{name}"), svg.as_bytes())?;
        }
        Ok(())
    })
}

/// A single stage run on its own, as exposed by the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageCommand {
    Ingest,
    Outliers,
    Cluster,
    Spread,
    Classify,
    Scenario,
    Plot,
}

/// Files written by [`run_stage`], relative to the output directory, and
/// whether an earlier artifact was reused.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageRun {
    pub written: Vec<String>,
    pub reused: Vec<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_slice(&fs::read(path)?)?))
}

struct StageContext<'a> {
    cfg: &'a PipelineConfig,
    input: Input,
    matrix: FeatureMatrix,
    params: StandardizationParams,
    run: StageRun,
}

impl StageContext<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.cfg.output_dir.join(rel), bytes)?;
        self.run.written.push(rel.to_string());
        Ok(())
    }

    /// k-means labels from `clusters.json` when it matches this input and
    /// config, otherwise freshly computed.
    fn kmeans(&mut self) -> Result<(Vec<usize>, usize)> {
        let path = self.cfg.output_dir.join("clusters.json");
        if let Some(a) = read_json::<ClusterArtifact>(&path)? {
            if a.dataset_sha256 == self.input.fingerprint.sha256 && a.config == self.cfg.kmeans {
                self.run.reused.push("clusters.json".into());
                return Ok((a.labels_for(&self.input.dataset)?, a.k));
            }
        }
        let (model, _) = cluster_stage(
            &self.matrix,
            &self.params,
            &self.cfg.kmeans,
            &self.input.fingerprint.sha256,
        )
        .map_err(|e| e.at_stage("kmeans"))?;
        Ok((model.assignments, model.config.k))
    }

    /// Spread labels from `transduction.json` when it matches, otherwise
    /// freshly computed.
    fn spread(&mut self) -> Result<(Vec<usize>, usize)> {
        let path = self.cfg.output_dir.join("transduction.json");
        if let Some(a) = read_json::<TransductionArtifact>(&path)? {
            if a.dataset_sha256 == self.input.fingerprint.sha256
                && a.kmeans_config == self.cfg.kmeans
                && a.config == self.cfg.spread
            {
                self.run.reused.push("transduction.json".into());
                return Ok((a.labels_for(&self.input.dataset)?, self.cfg.kmeans.k));
            }
        }
        let (labels, k) = self.kmeans()?;
        let t = spread_stage(
            &self.matrix,
            &labels,
            &self.cfg.kmeans,
            &self.cfg.spread,
            &self.input.fingerprint.sha256,
        )
        .map_err(|e| e.at_stage("spread"))?;
        Ok((t.rows.iter().map(|r| r.label).collect(), k))
    }
}

/// Run one stage, reusing matching upstream artifacts from the output
/// directory and recomputing the rest in memory. Only the stage's own
/// artifacts are written.
pub fn run_stage(config: &PipelineConfig, command: StageCommand) -> Result<StageRun> {
    config.validate().map_err(|e| e.at_stage("config"))?;
    let cfg = config.with_derived_seeds();
    let input = load_input(&cfg).map_err(|e| e.at_stage("load"))?;
    let (matrix, params) =
        clustering_features(&input.dataset).map_err(|e| e.at_stage("standardize"))?;
    let mut ctx = StageContext {
        cfg: &cfg,
        input,
        matrix,
        params,
        run: StageRun::default(),
    };
    let sha = ctx.input.fingerprint.sha256.clone();
    match command {
        StageCommand::Ingest => {
            let bytes = to_json(&ctx.input.fingerprint)?;
            ctx.write("ingest.json", &bytes)?;
        }
        StageCommand::Outliers => {
            let report = detect_outliers(&ctx.input.dataset, &cfg.outliers)
                .map_err(|e| e.at_stage("outliers"))?;
            ctx.write("outliers.csv", &outlier_csv(&report)?)?;
        }
        StageCommand::Cluster => {
            let (_, a) = cluster_stage(&ctx.matrix, &ctx.params, &cfg.kmeans, &sha)
                .map_err(|e| e.at_stage("kmeans"))?;
            ctx.write("clusters.json", &to_json(&a)?)?;
        }
        StageCommand::Spread => {
            let (labels, _) = ctx.kmeans()?;
            let t = spread_stage(&ctx.matrix, &labels, &cfg.kmeans, &cfg.spread, &sha)
                .map_err(|e| e.at_stage("spread"))?;
            ctx.write("transduction.json", &to_json(&t)?)?;
        }
        StageCommand::Classify => {
            let (labels, _) = ctx.spread()?;
            let outcomes = classify_stage(&ctx.input.dataset, &labels, &cfg)
                .map_err(|e| e.at_stage("classify"))?;
            let results: Vec<HorizonResult> = outcomes.into_iter().map(|o| o.result).collect();
            let mut buf = Vec::new();
            write_table2(&results, &mut buf)?;
            ctx.write("table2.csv", &buf)?;
        }
        StageCommand::Scenario => {
            let (labels, k) = ctx.spread()?;
            let only = PipelineConfig {
                models: vec![cfg.scenario_model],
                ..cfg.clone()
            };
            let report = classify_stage(&ctx.input.dataset, &labels, &only)
                .and_then(|o| {
                    scenario_stage(&ctx.input.dataset, &labels, &o, cfg.scenario_model, k)
                })
                .map_err(|e| e.at_stage("scenario"))?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            ctx.write("table3.csv", &buf)?;
            ctx.write("scenario.json", &to_json(&report)?)?;
            let traj = trajectories_csv(&ctx.input.dataset, &labels)?;
            ctx.write("trajectories.csv", &traj)?;
        }
        StageCommand::Plot => {
            let (labels, _) = ctx.spread()?;
            let charts = plot_stage(&ctx.input.dataset, &ctx.matrix, &labels, &cfg.charts)
                .map_err(|e| e.at_stage("plot"))?;
            for (name, svg) in charts {
                ctx.write(&format!("charts/{name}"), svg.as_bytes())?;
            }
        }
    }
    Ok(ctx.run)
}
