use thiserror::Error;

pub type Result<T> = std::result::Result<T, LpjtError>;

#[derive(Debug, Error)]
pub enum LpjtError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("class id {label} out of range for {num_classes} classes ({context})")]
    ClassOutOfRange {
        label: usize,
        num_classes: usize,
        context: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// The right-hand side of the generalized eigenproblem could not be factored.
    #[error("factorization failed (condition estimate {condition:.3e})")]
    Factorization { condition: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LpjtError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LpjtError::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        LpjtError::DimensionMismatch(msg.into())
    }
}
