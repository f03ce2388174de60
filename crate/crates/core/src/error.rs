use crate::C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, RegError>;

#[derive(Debug, Error)]
pub enum RegError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// `λ - A` (or `λ - A^κ`) is numerically singular.
    #[error("near-singular resolvent at λ = {lambda}: smallest singular value {sigma_min:.3e} <= threshold {threshold:.3e}")]
    NearSingularResolvent {
        lambda: C64,
        sigma_min: f64,
        threshold: f64,
    },

    #[error(
        "feedback loop I + κP_c(λ) is singular at λ = {lambda} (condition number {condition:.3e})"
    )]
    FeedbackLoopSingular { lambda: C64, condition: f64 },

    #[error("transmission zero near ω = {omega}: P_c^κ(±iω) has condition number {condition:.3e}")]
    TransmissionZero { omega: f64, condition: f64 },

    #[error("zero-frequency gate failed: {reason}")]
    ResolventFailure { reason: String },

    #[error("Gram matrix is not symmetric positive definite")]
    GramNotPositiveDefinite,

    #[error("nonzero feedthrough D is not supported")]
    FeedthroughUnsupported,

    #[error("degenerate boundary value problem at ω = {omega}")]
    DegenerateBvp { omega: f64 },

    #[error("unsupported model request: {0}")]
    UnsupportedModel(String),

    #[error("non-finite state at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("matrix file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
