use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: expected {expected}, got {got}")]
    InvalidDimension { expected: usize, got: usize },

    #[error("vector entries must be finite (entry {index} is {value})")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("alpha-moment is unbounded: tail index {tail_p} must exceed alpha {alpha}")]
    MomentUnbounded { alpha: f64, tail_p: f64 },

    #[error("invalid clipping level {0}: must be positive and finite")]
    InvalidClipLevel(f64),

    #[error("invalid privacy target: {0}")]
    InvalidTarget(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("regime tables assume no privacy noise (sigma_omega = {sigma_omega}); use optimal_lambda_dp instead")]
    TablesNotApplicable { sigma_omega: f64 },

    #[error("step-size term {term} evaluated to non-positive value {value}")]
    Internal { term: &'static str, value: f64 },

    #[error("iterate diverged at step {step}")]
    Diverged { step: u64 },

    #[error("{0}")]
    Precondition(String),

    #[error("experiment failed: {failed} of {total} trials diverged")]
    ExperimentFailed { failed: usize, total: usize },

    #[error("records do not come from a single configuration: {0}")]
    MixedRecords(String),

    #[error("unknown output format `{0}` (expected `csv` or `json`)")]
    UnknownFormat(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn params(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            field,
            reason: reason.into(),
        }
    }
}
