use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input file not found: {0}")]
    MissingFile(PathBuf),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("duplicate record for ({country}, {year})")]
    DuplicateKey { country: String, year: i32 },
    #[error("temporal split leaves the {side} side empty")]
    EmptySplit { side: &'static str },

    #[error("at least {needed} values required, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("zero variance in `{0}`")]
    ZeroVariance(String),
    #[error("unknown category `{value}` in column `{column}`")]
    UnknownCategory { column: String, value: String },
    #[error("requested {requested} components but matrix rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("cannot hide labels while keeping every class visible")]
    AllHidden,
    #[error("no visible labels")]
    NoVisibleLabels,

    #[error("only one cluster present")]
    SingleCluster,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} is not binary")]
    NonBinary(usize),
    #[error("only one class present")]
    OneClassOnly,

    #[error("no countries start in cluster {0}")]
    EmptySourceCluster(usize),
    #[error("missing assignment for ({country}, {year})")]
    MissingAssignment { country: String, year: i32 },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Stage { source, .. } => source.kind(),
            Error::InvalidConfig(_) | Error::Toml(_) | Error::UnknownVariable(_) => {
                ErrorKind::Usage
            }
            Error::ZeroVariance(_)
            | Error::RankDeficient { .. }
            | Error::Numerical(_)
            | Error::SingleCluster => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
