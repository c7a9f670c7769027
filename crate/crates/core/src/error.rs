use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("behind camera: camera-space z = {z} mm")]
    BehindCamera { z: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("degenerate camera: {0}")]
    DegenerateCamera(String),

    #[error("kernel side {side} px does not fit a {width}x{height} image")]
    KernelTooLarge { side: usize, width: usize, height: usize },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("degenerate prediction: output norm {norm:e}")]
    DegeneratePrediction { norm: f64 },

    #[error("no pupil found")]
    NoPupil,

    #[error("contaminated split: identity {0} appears in both train and test sets")]
    ContaminatedSplit(u64),

    #[error("mismatched sweep axes: {0}")]
    AxisMismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sweep cell (axis value {value}, trial {trial}) failed: {source}")]
    Cell {
        value: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
