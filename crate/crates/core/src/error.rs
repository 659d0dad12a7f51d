use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("frequencies belong to different contexts")]
    ContextMismatch,

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("coordinate vector has length {found}, context has {expected} basis symbols")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot parse rational {0:?}")]
    InvalidRational(String),

    #[error("frequency tuple is empty")]
    EmptyTuple,

    #[error("frequency tuple is not Z-independent")]
    DependentTuple,

    #[error("frequency {0} does not lie in the integer span of the level; refine the level first")]
    FrequencyNotInLevel(String),

    #[error("level is not refinable: {0}")]
    NotRefinable(String),

    #[error("level spaces use different parametrizations ({0} vs {1})")]
    ParametrizationMismatch(String, String),

    #[error("level point does not match the level: {0}")]
    PointShape(String),

    #[error("frequency value {found} does not match r*tau = {expected}")]
    FrequencyMismatch { expected: f64, found: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error:e}")]
    NonConvergence { estimate: Complex64, error: f64 },

    #[error("invalid parametrization: {0}")]
    InvalidParametrization(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("axis is not a unit vector (norm {0})")]
    NonUnitAxis(f64),

    #[error("invalid decomposition spec: {0}")]
    InvalidSpec(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
