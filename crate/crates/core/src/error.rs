//! Library error type.
//!
//! Everything here is a domain error: the inputs name a computation the
//! library refuses to perform (wrong rank, non-generic charge where
//! genericity is required, series outside its disk, ...). Tolerance
//! failures of verification routines are reported as data, not as errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TodaError {
    #[error("rank must be at least 2, got {0}")]
    RankTooSmall(usize),

    #[error("rank mismatch: expected sl({expected}), got sl({got})")]
    RankMismatch { expected: usize, got: usize },

    #[error("coordinate vector has length {got}, expected {expected}")]
    CoordLength { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("permutation {0:?} is not a bijection on 1..=n")]
    BadPermutation(Vec<usize>),

    #[error("charge has unbound continuous parameter `{0}`")]
    UnboundParameter(String),

    #[error("operation requires a charge without continuous parameters")]
    ContinuousCharge,

    #[error("coupling b must be positive and finite, got {0}")]
    BadCoupling(f64),

    #[error("charge is not generic: {witness}")]
    NonGeneric { witness: String },

    #[error("W3 charge undefined: {0}")]
    W3Undefined(String),

    #[error("degenerate label requires direction 1 or n-1, got {0}")]
    BadDirection(usize),

    #[error("series did not converge within {max_terms} terms (|z| = {abs_z})")]
    SeriesNoConvergence { max_terms: usize, abs_z: f64 },

    #[error("series argument |z| = {abs_z} exceeds radius guard {radius}")]
    RadiusExceeded { abs_z: f64, radius: f64 },

    #[error("lower series parameter {value} is a non-positive integer")]
    LowerParameterPole { value: f64 },

    #[error("exponents are resonant: {0}")]
    ResonantExponents(String),

    #[error("argument {0} outside the supported domain: {1}")]
    OutsideDomain(f64, String),

    #[error("square root of a negative or odd-order special value: {0}")]
    BadSqrt(String),

    #[error("field constraints violated: {0}")]
    ConstraintViolation(String),

    #[error("neutrality violated: {0}")]
    NeutralityViolated(String),

    #[error("ODE integration failed: {0}")]
    OdeFailure(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, TodaError>;
