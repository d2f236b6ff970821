use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable model: rho must be < 1, got {rho}")]
    Unstable { rho: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical instability: negative probability {value:e} at s = {s}")]
    NumericalInstability { s: usize, value: f64 },

    #[error("quadrature did not converge: refinement disagreement {disagreement:e}")]
    Precision { disagreement: f64 },

    #[error("event cap of {max_events} reached before coupling")]
    Truncated { max_events: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
