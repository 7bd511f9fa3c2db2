use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("random variable is not L2-normalized (‖X‖₂ = {norm})")]
    Normalization { norm: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("solver did not converge after {iterations} iterations (best value {best}, spread {spread:e})")]
    Solver {
        iterations: usize,
        best: f64,
        spread: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
