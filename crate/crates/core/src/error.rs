use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("node proximity at t={t}: density {rho:.3e} below floor")]
    NodeProximity { t: f64, q: [f64; 3], rho: f64 },
    #[error("step limit of {0} exceeded")]
    StepLimit(usize),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("sampling failure: {0}")]
    Sampling(String),
}

impl Error {
    /// True for errors that signal numerical non-convergence rather than bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_) | Error::StepLimit(_) | Error::NodeProximity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
