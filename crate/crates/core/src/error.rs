use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel ({i}, {j}) outside {width}x{height} grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no valid pixels: {0}")]
    EmptyMask(&'static str),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}: expected a 2:1 equirectangular grid, found {width}x{height}")]
    WrongAspect {
        path: PathBuf,
        width: usize,
        height: usize,
    },

    #[error("{path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("manifest {path}, line {line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("triplet sampling gave up after {attempts} attempts: {constraint}")]
    SamplingExhausted { attempts: usize, constraint: String },

    #[error("manifests do not align: {0}")]
    Misaligned(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        }
    }

    /// True for failures caused by the input data rather than by the caller.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidArgument(_) | Error::MissingColumn(_))
    }
}
