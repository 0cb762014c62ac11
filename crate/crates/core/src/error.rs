use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("privacy budget must be positive and finite or +inf, got {0}")]
    InvalidBudget(f64),

    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),

    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),

    #[error("{what} requires n <= {limit}, graph has n = {n}")]
    TooLarge { what: &'static str, n: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trial {trial}: {source}")]
    Trial { trial: usize, source: Box<Error> },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Budgets are accepted when strictly positive. `+inf` is allowed and means
/// "no noise", which is how the noiseless limits are exercised.
pub(crate) fn check_budget(eps: f64) -> Result<f64> {
    if eps > 0.0 && !eps.is_nan() {
        Ok(eps)
    } else {
        Err(Error::InvalidBudget(eps))
    }
}
