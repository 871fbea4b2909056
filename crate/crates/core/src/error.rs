use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative mass {value} at entry {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1 within {tol:e}")]
    BadNormalization { sum: f64, tol: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coupling marginal off by {residual:e} (tolerance {tol:e})")]
    MarginalMismatch { residual: f64, tol: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("{vars} variables exceed the cap of {cap}")]
    CapExceeded { vars: usize, cap: usize },

    #[error("epsilon {0} is outside (0, 1/2)")]
    BadEpsilon(f64),

    #[error("invalid ensemble spec: {0}")]
    BadSpec(String),
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}
