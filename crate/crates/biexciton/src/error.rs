use thiserror::Error;

/// Failure modes of the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no bound solution: {0}")]
    Existence(String),
    #[error("{msg} (residual {residual:e})")]
    Numerical { msg: String, residual: f64 },
    #[error("out of domain: {0}")]
    Domain(String),
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("evaluated at a pole: {0}")]
    Pole(String),
    #[error("floating-point range exceeded: {0}")]
    Range(String),
    #[error("timing: {0}")]
    Timing(String),
}

impl Error {
    pub(crate) fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            msg: msg.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
