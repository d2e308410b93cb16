//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Inputs outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration: inadmissible regime, malformed parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A computation left the representable floating-point range.
    #[error("numeric range error: {0}")]
    NumericRange(String),

    /// Requested order/feature exceeds what the inputs support.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative optimizer failed to converge; carries the best action
    /// value found and its path samples on the uniform mesh.
    #[error("optimization failed: {reason} (best action found: {best_action})")]
    OptimizationFailed { reason: String, best_action: f64, best_path: Vec<f64> },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericRange(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
