//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input table row. `line` is 1-based and counts the header.
    #[error("{table} line {line}: {msg}")]
    Parse { table: String, line: u64, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("missing service population for {city_id} ({sector}) in {year}")]
    MissingPopulationYear {
        city_id: String,
        sector: String,
        year: i32,
    },

    #[error("demand series {city_id} ({sector}) is not in stage {expected}, cannot {op}")]
    StageViolation {
        city_id: String,
        sector: String,
        expected: String,
        op: String,
    },

    #[error("cannot detrend {city_id} ({sector}): year {year} has zero mean consumption")]
    DetrendZeroYear {
        city_id: String,
        sector: String,
        year: i32,
    },

    #[error("cannot detrend {city_id} ({sector}): {msg}")]
    DetrendPrecondition {
        city_id: String,
        sector: String,
        msg: String,
    },

    #[error("{city_id} {year}-{month:02}: only {have} of {total} days present (need >= {need_pct}%)")]
    InsufficientDays {
        city_id: String,
        year: i32,
        month: u32,
        have: usize,
        total: usize,
        need_pct: f64,
    },

    #[error("{location}: {have} usable years for seasonal normals, need >= {need}")]
    InsufficientYears {
        location: String,
        have: usize,
        need: usize,
    },

    #[error("training table for {city_id} has {have} rows, need >= {need}")]
    TooFewRows {
        city_id: String,
        have: usize,
        need: usize,
    },

    #[error("outcome {outcome} has zero variance")]
    ZeroVarianceOutcome { outcome: String },

    #[error("prediction input is missing feature column {name}")]
    MissingFeature { name: String },

    #[error("prediction input feature order differs from training (position {position}: {got} vs {expected})")]
    FeatureOrderMismatch {
        position: usize,
        got: String,
        expected: String,
    },

    #[error("analog {analog_id} has no climate coverage for {year}-{month:02}")]
    MissingAnalogCoverage {
        analog_id: String,
        year: i32,
        month: u32,
    },

    #[error("analog candidate pool is empty")]
    EmptyPool,

    #[error("observations have zero variance; r2 undefined")]
    ZeroVarianceObservations,

    #[error("observations have non-positive mean {mean}; nrmse undefined")]
    NonPositiveMean { mean: f64 },

    #[error("k-fold split needs n >= k, got n={n}, k={k}")]
    TooFewForFolds { n: usize, k: usize },

    #[error("no usable city in region {region}")]
    NoUsableCity { region: String },

    #[error("nothing to report: {0}")]
    EmptyResults(String),

    #[error("model serialization: {0}")]
    ModelFormat(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(table: impl Into<String>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            table: table.into(),
            line,
            msg: msg.into(),
        }
    }
}
