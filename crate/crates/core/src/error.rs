use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument {arg} outside the domain ({reason})")]
    Domain {
        func: &'static str,
        arg: f64,
        reason: &'static str,
    },

    #[error("invalid parameter vector: {0}")]
    InvalidParams(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dataset is degenerate (all {n} observations equal {value})")]
    DegenerateData { n: usize, value: f64 },

    #[error("subfamily {family}: {reason}")]
    Subfamily { family: String, reason: String },

    #[error("prior {prior}: {reason}")]
    Prior { prior: String, reason: String },

    #[error("radicand of {prior} is {value:e} at phi = {phi}")]
    NegativeRadicand { prior: String, phi: f64, value: f64 },

    #[error("exponent fit failed: {0}")]
    ExponentFit(String),

    #[error("posterior moments are undefined: {0}")]
    NotProper(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("refusing to sample: {0}")]
    PriorGate(String),

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
