use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error taxonomy shared by all modules.
///
/// `InvalidArgument` and `Config` are usage errors (CLI exit code 2); the
/// rest are physics or convergence failures (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("propagation failure at t = {t}: {reason}")]
    PropagationFailure { t: f64, reason: String },

    #[error("relaxation failure: {0}")]
    RelaxationFailure(String),

    #[error("no plateau detected: {0}")]
    NoPlateau(String),

    #[error("no post-pulse oscillation above noise: {0}")]
    NoPlasmon(String),

    #[error("undefined observable: {0}")]
    UndefinedObservable(String),

    #[error("nonlinear response: {0}")]
    NonlinearResponse(String),

    #[error("checkpoint mismatch:\n{0}")]
    CheckpointMismatch(String),

    #[error("parse error in {file} at row {row}: {reason}")]
    Parse {
        file: String,
        row: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than failed numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Config(_) | Error::Parse { .. }
        )
    }
}
