//! Error type shared by every module of the crate.

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = SspError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SspError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty point subset")]
    EmptySubset,

    #[error("point index {index} out of bounds for grid of {len} points")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("segment maximum must be positive, got {0}")]
    NonPositiveMax(f64),

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate timestamp {timestamp} with conflicting values {first} and {second}")]
    ConflictingDuplicate {
        timestamp: String,
        first: f64,
        second: f64,
    },

    #[error("no candidate days of group {group} in the last {window} days")]
    NoCandidates { group: String, window: usize },

    #[error("no candidate has temperature data on the forecast mask")]
    NoTemperatureCoverage,

    #[error("temperature forecast does not cover point {0}")]
    ForecastMaskMismatch(usize),

    #[error("no segment within bandwidth {0}")]
    NoSegmentWithinBandwidth(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("date {0} is outside the available data")]
    DateOutOfRange(NaiveDate),

    #[error("actual value at point {index} must be positive, got {value}")]
    NonPositiveActual { index: usize, value: f64 },

    #[error("replication failed after {attempts} attempts: {reason}")]
    RetriesExhausted { attempts: usize, reason: String },
}
