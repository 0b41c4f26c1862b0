use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riskdyn::classifiers::ModelKind;
use riskdyn::pipeline::{run_pipeline, run_stage, PipelineConfig, StageCommand};
use riskdyn::{Error, ErrorKind};

/// Temporal disaster-risk cluster dynamics.
#[derive(Parser)]
#[command(name = "riskdyn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the input CSV; writes ingest.json.
    Ingest(Common),
    /// Z-score outlier report; writes outliers.csv.
    Outliers(Common),
    /// K-means on the standardized indicators; writes clusters.json.
    Cluster(Common),
    /// Label spreading seeded by the k-means labels; writes transduction.json.
    Spread(Common),
    /// Temporal-split classification; writes table2.csv.
    Classify(Common),
    /// Cluster transition probabilities; writes table3.csv and scenario.json.
    Scenario(Common),
    /// SVG charts under charts/.
    Plot(Common),
    /// Every stage, plus manifest.json and metrics.json.
    Run(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Input CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,
    /// Label-spreading clamping factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Neighbours in the spreading graph.
    #[arg(long)]
    neighbors: Option<usize>,
    /// Share of labels hidden before spreading.
    #[arg(long = "hide-fraction")]
    hide_fraction: Option<f64>,
    /// Horizon in years; repeat for several.
    #[arg(long, value_parser = ["1", "3", "5"])]
    horizon: Vec<String>,
    /// Classifier; for `scenario` and `run` it selects the scenario model.
    #[arg(long, value_parser = ["lr", "dt", "rf", "gbt"])]
    model: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self, stage: Option<StageCommand>) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.input {
            cfg.input = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.k {
            cfg.kmeans.k = v;
        }
        if let Some(v) = self.alpha {
            cfg.spread.alpha = v;
        }
        if let Some(v) = self.neighbors {
            cfg.spread.n_neighbors = v;
        }
        if let Some(v) = self.hide_fraction {
            cfg.spread.hide_fraction = v;
        }
        if !self.horizon.is_empty() {
            cfg.horizons = self
                .horizon
                .iter()
                .map(|h| h.parse().expect("validated by clap"))
                .collect();
        }
        if let Some(m) = &self.model {
            let m = ModelKind::parse(m).expect("validated by clap");
            match stage {
                Some(StageCommand::Classify) => cfg.models = vec![m],
                _ => {
                    cfg.scenario_model = m;
                    if !cfg.models.contains(&m) {
                        cfg.models.push(m);
                    }
                }
            }
        }
        Ok(cfg)
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (common, stage) = match &cli.command {
        Command::Ingest(c) => (c, Some(StageCommand::Ingest)),
        Command::Outliers(c) => (c, Some(StageCommand::Outliers)),
        Command::Cluster(c) => (c, Some(StageCommand::Cluster)),
        Command::Spread(c) => (c, Some(StageCommand::Spread)),
        Command::Classify(c) => (c, Some(StageCommand::Classify)),
        Command::Scenario(c) => (c, Some(StageCommand::Scenario)),
        Command::Plot(c) => (c, Some(StageCommand::Plot)),
        Command::Run(c) => (c, None),
    };
    let result = common.config(stage).and_then(|cfg| {
        let out = cfg.output_dir.clone();
        match stage {
            Some(s) => run_stage(&cfg, s).map(|r| {
                for f in &r.reused {
                    eprintln!("reused {}", out.join(f).display());
                }
                for f in &r.written {
                    println!("{}", out.join(f).display());
                }
            }),
            None => run_pipeline(&cfg).map(|m| {
                for a in &m.artifacts {
                    println!("{}", out.join(&a.path).display());
                }
                println!("{}", out.join("manifest.json").display());
            }),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
