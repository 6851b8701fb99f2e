use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("functional is not in the dual cone; unbounded along {ray:?}")]
    NotInDualCone { ray: Vec<f64> },

    #[error("dual-cone membership could not be decided: {0}")]
    MembershipUnknown(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid has {points} points, above the cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("improper function: {0}")]
    Improper(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("function is infinite at the base point")]
    InfiniteAtPoint,

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("objective is not coercive: {0}")]
    NonCoercive(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("{0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}
