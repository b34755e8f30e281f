use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("function is not strictly convex: derivative fails to increase near {at}")]
    NotStrictlyConvex { at: f64 },

    #[error("piecewise-affine dual is not convex at knot {index}")]
    NotConvex { index: usize },

    #[error("argument {value} exceeds the representable domain [0, {limit}]")]
    DomainExceeded { value: f64, limit: f64 },

    #[error("zero vector has no positive gauge")]
    ZeroVector,

    #[error("dual function is not normalized: M*(1) = {value}, expected 1")]
    NotNormalized { value: f64 },

    #[error("function is not strictly 2-concave (minimum relative margin {margin:e})")]
    NotTwoConcave { margin: f64 },

    #[error("degenerate profile: H(s) - sH'(s) = {gap:e} at s = {at}")]
    DegenerateProfile { at: f64, gap: f64 },

    #[error("sequence is not nonincreasing at index {index}")]
    NotDecreasing { index: usize },

    #[error("sequence entry {index} is not strictly positive")]
    NotPositive { index: usize },

    #[error("knot values are not strictly increasing at index {index}")]
    NotStrictlyIncreasing { index: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("n = {n} exceeds the exact-enumeration cutoff {max}")]
    TooLargeForExact { n: usize, max: usize },

    #[error("root is not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("iteration did not converge after {iterations} steps")]
    NoConvergence { iterations: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
