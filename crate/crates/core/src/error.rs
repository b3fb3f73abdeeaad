use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while decoding a weight file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightFileError {
    #[error("bad magic bytes {0:02x?}, expected \"WKWD\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("file truncated while reading {0}")]
    Truncated(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload holds {actual} bytes but descriptors declare {declared}")]
    PayloadSize { declared: u64, actual: u64 },
    #[error("tensor `{name}` declared at offset {offset}, expected {expected}")]
    Offset {
        name: String,
        offset: u64,
        expected: u64,
    },
    #[error("layer {layer}: tensor `{name}` has shape {actual:?}, expected {expected:?}")]
    ShapeMismatch {
        layer: usize,
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("layer {layer}: missing tensor `{name}`")]
    MissingTensor { layer: usize, name: String },
    #[error("unexpected tensor `{0}`")]
    UnexpectedTensor(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("audio holds {got} samples, fewer than one {need}-sample window")]
    EmptyInput { got: usize, need: usize },
    #[error("unsupported sample rate {0} Hz (only 16000 Hz is accepted)")]
    UnsupportedRate(u32),
    #[error("unsupported audio format: {0}")]
    AudioFormat(String),
    #[error("need at least {need} frames, got {got}")]
    InsufficientFrames { got: usize, need: usize },
    #[error("log-domain offset moves features outside the exact range")]
    OffsetOutOfRange,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid batch-norm statistics: {0}")]
    InvalidStats(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("receptive field of {rf} frames exceeds the {frames}-frame input")]
    FrontEndTooDeep { rf: usize, frames: usize },
    #[error("model has no convolutional front end")]
    NoConvFrontEnd,
    #[error("unknown reference model `{0}`")]
    UnknownModel(String),
    #[error("strategy `{strategy}` needs a recurrent tail: {reason}")]
    Strategy {
        strategy: &'static str,
        reason: String,
    },
    #[error("threshold undefined: no positive scores")]
    UndefinedThreshold,
    #[error("mean undefined: no event matched a reference")]
    UndefinedMean,
    #[error("clock error: {0}")]
    Clock(String),
    #[error("invalid detector config: {0}")]
    Detector(String),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("{failed} of {total} utterances failed to score, aborting")]
    TooManyFailures { failed: usize, total: usize },
    #[error("weight file: {0}")]
    WeightFile(#[from] WeightFileError),
    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, path: impl Into<PathBuf>) -> Self {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Strips any path context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Path { source, .. } => source.root(),
            other => other,
        }
    }
}
