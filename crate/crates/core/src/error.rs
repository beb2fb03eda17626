use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller violated a documented precondition (e.g. smoothness metadata).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Evaluation requested exactly at a kernel singularity.
    #[error("singularity: {0}")]
    Singularity(String),
    /// An integral is infinite or its integrand does not decay.
    #[error("divergent integral: {0}")]
    Divergence(String),
    /// The requested combination is not implemented.
    #[error("unsupported: {0}")]
    Capability(String),
    /// The integrand produced a non-finite value.
    #[error("non-finite integrand value {value} at {point:?}")]
    Evaluation { point: Vec<f64>, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
