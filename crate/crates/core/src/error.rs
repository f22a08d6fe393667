//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by the physics and numerics layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Malformed or inconsistent input data (non-Hermitian matrix, dimension
    /// mismatch, invalid distribution, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input is structurally valid but outside the domain of the formula
    /// (vacuous bound, log of a non-positive argument, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A density-of-states or bath model cannot support the requested
    /// evaluation (no root in bracket, non-concave entropy, ...).
    #[error("model invalid: {0}")]
    ModelInvalid(String),

    /// A quadrature or iterative scheme failed to reach its tolerance.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// The dynamics is unstable or marginally stable (real-axis pole,
    /// near-resonant harmonic-balance system).
    #[error("instability: {0}")]
    Instability(String),

    /// An operation was called outside its declared regime of validity.
    #[error("regime error: {0}")]
    Regime(String),

    /// An API contract was violated (symbolic density queried pointwise,
    /// missing reservoir data, ...).
    #[error("contract error: {0}")]
    Contract(String),

    /// A setup is degenerate and the requested quantity is undefined.
    #[error("degenerate setup: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
