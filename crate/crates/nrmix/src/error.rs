use thiserror::Error;

/// Errors produced by model construction, configuration, and I/O.
///
/// Numerical routines themselves do not return errors: invalid parameter
/// combinations are rejected when the owning value is constructed, so the hot
/// sampling paths can assume validity.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter values outside their domain (e.g. `a <= 0`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Data that cannot be used (wrong shape, non-finite, degenerate range).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Inconsistent run configuration (e.g. a marginal sampler paired with a
    /// kernel that has no closed-form marginal).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A matrix that must be symmetric positive-definite failed its Cholesky
    /// factorization.
    #[error("matrix not positive-definite: {0}")]
    NotPositiveDefinite(String),

    /// CSV input could not be parsed; `line` is 1-based.
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid_parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn invalid_data(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
