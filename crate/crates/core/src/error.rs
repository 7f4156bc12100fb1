use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (seed file, pattern string, JSONL record).
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally well-formed input that breaks a data invariant.
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("embedding file: {0}")]
    Format(String),

    #[error("sentence id {0:016x} has no embedding")]
    MissingEmbedding(u64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NaN/Inf in a forward or backward pass, or a failed gradient check.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn generation(msg: impl Into<String>) -> Self {
        Error::Generation(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
