use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("bad image dimensions: expected 28x28, found {rows}x{cols}")]
    BadDimensions { rows: u32, cols: u32 },

    #[error("truncated payload: header declares {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("trailing bytes: header declares {expected} bytes, found {found}")]
    TrailingBytes { expected: usize, found: usize },

    #[error("label out of range: {value} at index {index}")]
    LabelOutOfRange { index: usize, value: u32 },

    #[error("image/label count mismatch: {images} images, {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("empty evaluation split")]
    EmptySplit,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty sweep")]
    EmptySweep,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("grid point {x} lies within {radius} of the kink at {kink}")]
    KinkViolation { x: f64, kink: f64, radius: f64 },

    #[error("column {0} has no converged existing activation to compare against")]
    NoReference(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that originate from reading or validating input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::BadMagic { .. }
                | Error::BadDimensions { .. }
                | Error::Truncated { .. }
                | Error::TrailingBytes { .. }
                | Error::LabelOutOfRange { .. }
                | Error::CountMismatch { .. }
                | Error::EmptyDataset
                | Error::Io { .. }
        )
    }
}
