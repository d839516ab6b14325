use thiserror::Error;

/// Errors surfaced by the laboratory's numerical kernels.
#[derive(Debug, Error)]
pub enum LabError {
    /// An argument left the domain a kernel is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its subdivision budget before
    /// meeting the requested absolute tolerance.
    #[error("quadrature did not converge: residual error {residual:.3e} > tolerance {tolerance:.3e}")]
    Quadrature { residual: f64, tolerance: f64 },

    /// A constructed object violated one of its structural invariants.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A Markov/consistency check on the tower partition failed.
    #[error("tower consistency: {0}")]
    TowerConsistency(String),

    /// Too few usable samples or points for the requested estimate.
    #[error("undersampled: {0}")]
    Undersampled(String),

    /// Invalid experiment or distribution configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
