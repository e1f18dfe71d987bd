use thiserror::Error;

/// Errors raised by the solver and the certificate evaluators.
#[derive(Debug, Error)]
pub enum FracError {
    /// Invalid or inconsistent configuration, detected before any compute.
    #[error("configuration error: {0}")]
    Config(String),

    /// A scalar function was queried outside the range where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver stopped without meeting its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A scalar root bracket did not contain a sign change.
    #[error("root bracketing failed for {what}: f({lo:.6e}) and f({hi:.6e}) have the same sign")]
    Bracket { what: &'static str, lo: f64, hi: f64 },

    /// An evolution step failed; the partial trajectory is dropped.
    #[error("evolution step {step} failed: {source}")]
    Step { step: usize, source: Box<FracError> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(FracError::Config(msg.into()))
}
