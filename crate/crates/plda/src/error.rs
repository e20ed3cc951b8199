//! Crate-wide error type. Data problems carry enough context (path, line,
//! offending id) that the CLI can print a single useful diagnostic line.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("need at least 2 distinct classes, found {0}")]
    TooFewClasses(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("within-class covariance is singular (largest eigenvalue {max_eigen:.3e} is at or below the floor {floor:.3e})")]
    SingularWithin { max_eigen: f64, floor: f64 },

    #[error("model transform is numerically singular (smallest singular value {0:.3e})")]
    SingularTransform(f64),

    #[error("empty sample list")]
    EmptySamples,

    #[error("epsilon[{index}] = {value} must be strictly positive")]
    NonPositiveEpsilon { index: usize, value: f64 },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero latent vector has no defined scale")]
    ZeroVector,

    #[error("unresolved {kind} id '{id}'")]
    UnresolvedId { kind: &'static str, id: String },

    #[error("score set has no {0} trials")]
    MissingTrials(&'static str),

    #[error("LDA output dimension {requested} exceeds limit {limit} (input dim {dim}, {classes} classes)")]
    LdaDimension { requested: usize, limit: usize, dim: usize, classes: usize },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("unknown {what} '{name}' (expected one of: {known})")]
    UnknownName { what: &'static str, name: String, known: String },

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, #[source] source: Box<Error> },

    #[error("{path}: {source}")]
    Io { path: PathBuf, #[source] source: std::io::Error },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }

    /// Tags an error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

/// Extension for tagging fallible pipeline stages.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
