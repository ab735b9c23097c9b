use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid encoder spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("non-finite loss {value} at iteration {iteration}")]
    NonFiniteLoss { iteration: usize, value: f64 },
    #[error("k-means needs k <= n (k = {k}, n = {n})")]
    TooManyClusters { k: usize, n: usize },
    #[error("fabric {0} has no cluster assignment")]
    Unclustered(u32),
    #[error("no observations of modality {0}")]
    MissingModality(String),
    #[error("need {needed} distractor fabrics but only {available} are available")]
    NotEnoughFabrics { needed: usize, available: usize },
    #[error("architecture {arch} cannot consume {what}")]
    ArchitectureMismatch { arch: String, what: String },
    #[error("unsupported PNM magic {0:?}")]
    UnsupportedMagic(String),
    #[error("malformed PNM: {0}")]
    MalformedPnm(String),
    #[error("truncated data: {0}")]
    Truncated(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }
}
