use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported PNG format: {0}")]
    UnsupportedPng(String),

    #[error("PNG decoding failed: {0}")]
    PngDecode(#[from] png::DecodingError),

    #[error("PNG encoding failed: {0}")]
    PngEncode(#[from] png::EncodingError),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("expected {expected} channel(s), found {found}")]
    ChannelCount { expected: String, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("homography is singular")]
    SingularHomography,

    #[error("no non-degenerate homography found after {0} attempts")]
    DegenerateHomography(usize),

    #[error("flow file format error: {0}")]
    FlowFormat(String),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("guided mode requires a guide image")]
    MissingGuide,

    #[error("frame count mismatch: {focused} focused frames vs {defocused} defocused frames")]
    CountMismatch { focused: usize, defocused: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn dims(expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
