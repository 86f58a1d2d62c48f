use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series `{name}` has {len} observations, at least {min} required")]
    SeriesTooShort { name: String, len: usize, min: usize },

    #[error("series `{name}` has a non-finite value at index {index}")]
    NonFinite { name: String, index: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("insufficient observations: {available} available, more than {required} required ({context})")]
    InsufficientObservations { available: usize, required: usize, context: String },

    #[error("singular matrix in {0}")]
    Singular(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("layout lacks the coefficients required by {0}")]
    MissingSymbol(String),

    #[error("log-likelihood is not finite: {0}")]
    NonFiniteLikelihood(String),
}
