use thiserror::Error;

/// Errors produced anywhere in the hiding and extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invalid detection record {image_id}: {message}")]
    Validation { image_id: String, message: String },

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("no usable images")]
    EmptyDictionary,

    #[error("label {0:?} is not in the mapping dictionary")]
    NotInDictionary(String),

    #[error("invalid sequence key length {0}; at least 2 bits are required")]
    InvalidLength(usize),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no usable images")]
    EmptyIndex,

    #[error("scrambling factor {0} has no image list")]
    UnknownFactor(u64),

    #[error("message bit at offset {offset} matches no scrambled sequence")]
    UnmatchableBit { offset: usize },

    #[error("empty message")]
    EmptyMessage,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("bit length {0} is not a multiple of 8")]
    Framing(usize),

    #[error("format error: {0}")]
    Format(String),

    #[error("authentication failed: wrong secret or tampered file")]
    Authentication,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn validation(image_id: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            image_id: image_id.to_owned(),
            message: message.into(),
        }
    }

    /// Process exit status for this error: 2 input/format, 3 algorithmic, 4 authentication.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnmatchableBit { .. } | Error::EmptyMessage => 3,
            Error::Authentication => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
