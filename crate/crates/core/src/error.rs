use thiserror::Error;

/// Errors raised by the library.
///
/// `Parameter` and `Configuration` reject inputs before any compute;
/// `Numerical` and `Internal` report failures that happen during compute.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by invalid input rather than failed compute.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Configuration(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks `s ∈ (0,1)`, the range shared by every fractional order.
pub(crate) fn check_unit_order(name: &str, s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} ∈ (0,1) required, got {s}")))
    }
}
