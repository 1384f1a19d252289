use thiserror::Error;

/// Errors produced anywhere in the simulation, imaging and classification chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("parse error at byte {offset}: {message}")]
    ParseAt { offset: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("no k-space samples survive: {0}")]
    EmptySupport(String),
    #[error("incident field has zero norm")]
    ZeroField,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("too few clips: {0}")]
    TooFewClips(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("empty bin: {0}")]
    EmptyBin(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("config hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
