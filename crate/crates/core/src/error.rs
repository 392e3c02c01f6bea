use thiserror::Error;

/// Errors raised by the numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MzError {
    #[error("polynomial order {order} outside 0..={max}")]
    Order { order: usize, max: usize },

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("arity mismatch: rule has dimension {rule}, function expects {function}")]
    Arity { rule: usize, function: usize },

    #[error("divergence at t = {t} (step {step})")]
    Divergence { t: f64, step: usize },

    #[error("divergent trajectory for quadrature node {node} at t = {t}")]
    NodeDivergence { node: usize, t: f64 },

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("time {t} outside kernel grid [0, {max}]")]
    Extent { t: f64, max: f64 },

    #[error("unsupported term: {0}")]
    UnsupportedTerm(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("epsilon still decreasing at t = {t}; increase the horizon")]
    NoSwitch { t: f64 },

    #[error("grid alignment error: {0}")]
    Alignment(String),

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MzError {
    fn from(e: std::io::Error) -> Self {
        MzError::Io(e.to_string())
    }
}

impl From<csv::Error> for MzError {
    fn from(e: csv::Error) -> Self {
        MzError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MzError>;
