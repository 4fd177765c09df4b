use thiserror::Error;

/// Errors surfaced by the library. Variants mirror the failure modes of the
/// public operations; the CLI maps schema errors to exit code 2 and numeric
/// check failures to exit code 1.
#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("unsupported pairing: {0}")]
    UnsupportedPairing(String),

    #[error("integrality violation: value {value} is {distance} away from the nearest integer (tolerance {tolerance})")]
    IntegralityViolation {
        value: String,
        distance: f64,
        tolerance: f64,
    },

    #[error("missing correlator data: {0}")]
    MissingCorrelators(String),

    #[error("missing potential for sector {0}")]
    MissingPotential(String),

    #[error("degenerate pairing: {0}")]
    DegeneratePairing(String),

    #[error("connection is not flat: {0}")]
    NonFlat(String),

    #[error("big-cell failure: {0}")]
    BigCell(String),

    #[error("Euler field does not vanish on the evaluation locus: {0}")]
    Locus(String),

    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("miniversality failure: {0}")]
    Miniversality(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
