//! Error type shared across the library.

use thiserror::Error;

/// Unified error for profile evaluation, ODE integration, grid evolution and
/// Fock-space construction.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive integrator could not proceed (step-size underflow).
    #[error("integration failure at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    /// An auxiliary function hit a singular point (u = 0 or rho -> 0).
    #[error("singular auxiliary function at tau = {tau}: {what}")]
    Singular { tau: f64, what: String },

    /// Wavefunction no longer resolved by the grid (boundary contact).
    #[error("wavefunction reached the grid boundary at tau = {tau} (|psi| = {amplitude:.3e})")]
    Resolution { tau: f64, amplitude: f64 },

    /// Two grid wavefunctions with incompatible (N, L).
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Fock-space truncation would corrupt the requested state.
    #[error("truncation unsafe: {0}")]
    Truncation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
