use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected}x{expected} lattice, got {found}")]
    Shape { expected: usize, found: String },

    #[error("site ({row}, {col}) out of range for a {size}x{size} lattice")]
    Index { row: usize, col: usize, size: usize },

    #[error("invalid SU(2) element: {0}")]
    InvalidRotation(String),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },

    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),

    #[error("recorded state did not survive input removal (overlap {overlap:.4} < {required})")]
    PersistenceFailure { overlap: f64, required: f64 },

    #[error("memory store is empty")]
    EmptyStore,

    #[error("cue energy {energy} is below the recall threshold {threshold}")]
    BelowThreshold { energy: f64, threshold: f64 },

    #[error("ambiguous recall: best memory {best} leads runner-up by {lead:.4} < {margin}")]
    Ambiguous { best: usize, lead: f64, margin: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("bad pattern header: {0}")]
    BadHeader(String),

    #[error("bad pattern dimensions: {0}")]
    BadDimensions(String),

    #[error("bad character {ch:?} at line {line}, column {column}")]
    BadCharacter { ch: char, line: usize, column: usize },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(key: &str, constraint: impl Into<String>) -> Self {
        Error::Validation { key: key.to_string(), constraint: constraint.into() }
    }

    /// True for errors caused by malformed or out-of-contract inputs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Shape { .. }
                | Error::Index { .. }
                | Error::InvalidRotation(_)
                | Error::UnstableStep { .. }
                | Error::InvalidTemperature(_)
                | Error::Parse { .. }
                | Error::Validation { .. }
                | Error::UnknownKey { .. }
                | Error::BadHeader(_)
                | Error::BadDimensions(_)
                | Error::BadCharacter { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
