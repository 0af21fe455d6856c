use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(f64),

    #[error("empty sample")]
    EmptySample,

    #[error("reference support violation: reference probability at digit {digit} is {value}")]
    ReferenceSupport { digit: usize, value: f64 },

    #[error("invalid frequency vector: {0}")]
    InvalidFrequencies(String),

    #[error("negative chi-square statistic: {0}")]
    NegativeStatistic(f64),

    #[error("degrees of freedom must be positive")]
    ZeroDegreesOfFreedom,

    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate observation for {entity}/{tenor} on {date}")]
    DuplicateDate {
        line: u64,
        entity: String,
        tenor: String,
        date: NaiveDate,
    },

    #[error("line {line}: spread must be finite and positive, got {value}")]
    InvalidSpread { line: u64, value: String },

    #[error("series too short: {entity}/{tenor} has {len} observation(s)")]
    SeriesTooShort {
        entity: String,
        tenor: String,
        len: usize,
    },

    #[error("invalid date range: {from} is after {to}")]
    InvalidRange { from: NaiveDate, to: NaiveDate },

    #[error("empty slice for period {label}")]
    EmptyPeriod { label: String },

    #[error("invalid window spec: {0}")]
    InvalidWindow(String),

    #[error("series too short for windowing: {len} observation(s), need at least {needed}")]
    TooShortForWindowing { len: usize, needed: usize },

    #[error("insufficient windows for trend: {0}")]
    InsufficientWindows(usize),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynth(String),

    #[error("report format: {0}")]
    Report(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
