use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tracker, its front-end and the evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("activation {value} outside [0, 1] at frame {frame}")]
    ActivationRange { frame: u64, value: f64 },

    #[error("decode error at line {line}: {message}")]
    Decode { line: usize, message: String },

    #[error("malformed binary activation stream: {0}")]
    Binary(String),

    #[error("annotation error in {path}: {message}")]
    Annotation { path: PathBuf, message: String },

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
