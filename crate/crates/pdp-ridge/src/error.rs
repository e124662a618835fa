//! Error types shared across the crate.

use std::path::PathBuf;

/// Errors produced by dataset construction, calibration, fitting, data
/// loading and experiment planning.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Vector/matrix shapes do not line up (e.g. weight count vs. rows).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A feature or label lies outside its required range, or the data is
    /// empty. Out-of-range values are rejected, never clamped: the privacy
    /// calibration is only valid on the stated domain.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Weights are negative or do not sum to one.
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    /// A privacy budget is non-positive, non-finite, or implausibly large.
    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),

    /// A configuration parameter is out of range (e.g. lambda <= 0).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An internal numerical routine failed; with lambda > 0 this should
    /// never happen on valid inputs.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The subsampling step kept zero data points; the caller should
    /// discard the trial.
    #[error("empty subsample: no data points were kept")]
    EmptySubsample,

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    /// CSV structure problems: missing columns, non-numeric numeric
    /// fields, ragged rows. The message names the offending row/column.
    #[error("malformed csv: {0}")]
    MalformedCsv(String),

    /// A numeric column is constant, so min-max scaling is undefined.
    #[error("degenerate column: {0}")]
    DegenerateColumn(String),

    /// A train/test split would leave one side empty.
    #[error("empty split: {0}")]
    EmptySplit(String),

    /// An experiment plan failed validation.
    #[error("invalid plan: {0}")]
    PlanInvalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
