use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum MlpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires an exact solution but the problem has none")]
    MissingExactSolution,

    #[error("non-finite {what} at node theta={theta}")]
    NonFinite { theta: String, what: &'static str },

    #[error("inadmissible control at t={t}: {reason}")]
    InadmissibleControl { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, MlpError>;

impl MlpError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        MlpError::InvalidParameter(msg.into())
    }
}
