use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("SVD failed to converge after {sweeps} sweeps")]
    SvdConvergence { sweeps: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("frame {frame} is not bracketed by observed frames; cannot interpolate")]
    Extrapolation { frame: usize },
    #[error("forward tape does not match these weights: {0}")]
    TapeMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
