//! Error type shared across the solver pipeline.

use nalgebra::Complex;
use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building a problem or solving it.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix block does not have the shape implied by the declared dimensions.
    #[error("dimension mismatch for {name}: expected {expected}, got {found}")]
    DimensionMismatch {
        name: String,
        expected: String,
        found: String,
    },

    /// A matrix block or parameter contains NaN or infinity.
    #[error("{name} contains a non-finite entry")]
    NonFinite { name: String },

    /// A scalar parameter or dimension is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `R_uu` must be symmetric positive definite.
    #[error("R_uu is not strictly positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    /// `Q_yy` must be positive semi-definite up to a small tolerance.
    #[error("Q_yy is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },

    /// The fixed-point iteration ran out of iterations.
    #[error(
        "Riccati iteration did not converge within {iterations} iterations \
         (last max-abs update {last_update:e})"
    )]
    NonConvergence { iterations: usize, last_update: f64 },

    /// A linear solve hit a (numerically) singular matrix.
    #[error("singular matrix encountered in {context}")]
    Singular { context: &'static str },

    /// A Kronecker-vectorized linear operator is singular because a pair of
    /// eigenvalues puts `beta * lambda_a * lambda_b` on top of 1.
    #[error(
        "singular {context} operator: beta * ({lambda_a}) * ({lambda_b}) is too close to 1"
    )]
    SingularOperator {
        context: &'static str,
        lambda_a: Complex<f64>,
        lambda_b: Complex<f64>,
    },

    /// The QR/Schur eigenvalue iteration failed to converge.
    #[error("eigenvalue computation failed in {context}")]
    EigenFailure { context: &'static str },

    /// A simulated trajectory produced a non-finite state.
    #[error("simulation diverged: non-finite value first encountered at period {period}")]
    UnstableSimulation { period: usize },
}
