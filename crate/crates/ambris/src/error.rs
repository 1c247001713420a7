use std::path::PathBuf;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two points coincide where a positive distance is required.
    #[error("singular distance: {0}")]
    SingularDistance(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The argument (phase) of a zero complex value was requested.
    #[error("undefined argument: {0}")]
    UndefinedArgument(String),

    /// A field violates its invariant. `field` names the offending input.
    #[error("invalid `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },

    /// Malformed run configuration (syntax, unknown keys, bad version).
    #[error("config error: {0}")]
    Config(String),

    /// Index outside its documented range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &str, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.to_string(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
