use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] modnet_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: expected a {expected} artifact, found {found}")]
    WrongKind { path: PathBuf, expected: String, found: String },
    #[error("{path}: content hash mismatch (file edited or truncated)")]
    Corrupt { path: PathBuf },
    #[error("{what} was derived from {found}, not from {expected}")]
    Stale { what: String, expected: String, found: String },
    #[error("unsupported render format `{0}` (expected svg or dot)")]
    Format(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
