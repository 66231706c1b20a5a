use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("unknown requirement `{0}`")]
    UnknownRequirement(String),

    #[error("no annotation files found in {0}")]
    NoAnnotationFiles(PathBuf),

    #[error("dataset for {category} is too small to stratify: {positives} positive / {negatives} negative")]
    TooSmallToStratify {
        category: String,
        positives: usize,
        negatives: usize,
    },

    #[error("training set for {0} contains a single class")]
    SingleClass(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty vocabulary after filtering")]
    EmptyVocabulary,

    #[error("no Article headings found")]
    NoArticles,

    #[error("law text line {line}: {message}")]
    LawText { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("missing embedding for key `{0}`")]
    MissingEmbedding(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's input rather than a bug or an
    /// environment fault. Missing or unreadable input files count as input errors.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => matches!(
                source.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::InvalidData | std::io::ErrorKind::IsADirectory
            ),
            _ => true,
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
