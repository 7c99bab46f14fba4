use thiserror::Error;

/// Errors raised by the solver, the audit and the configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("material validation failed: {0}")]
    Validation(String),

    #[error("time step {tau} exceeds the stability threshold {tau_max} of the incremental problem")]
    StepTooLarge { tau: f64, tau_max: f64 },

    #[error("solver failure at step {step}: {message}")]
    Solver { step: usize, message: String },

    #[error("invariant violated at step {step}: {message}")]
    Invariant { step: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("audit error: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attaches a step index to solver and invariant errors raised inside a
    /// single step solve (which do not know their position in the run).
    pub fn at_step(self, k: usize) -> Self {
        match self {
            Error::Solver { message, .. } => Error::Solver { step: k, message },
            Error::Invariant { message, .. } => Error::Invariant { step: k, message },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
