use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Source and target masses differ by more than the relative tolerance.
    #[error("mass imbalance: source total {source_mass} vs target total {target_mass}")]
    MassImbalance { source_mass: f64, target_mass: f64 },

    /// Zero-mass or otherwise degenerate input that has no meaningful transport.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("transport solver did not converge after {0} pivots")]
    SolverStalled(usize),

    #[error("no valid patch position inside the region of interest")]
    EmptyRoi,

    #[error("entropy undefined: pooled histogram has zero mass")]
    UndefinedEntropy,

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    /// Malformed file content; `offset` is the byte position where decoding failed.
    #[error("malformed image at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// Every row of a batch input failed.
    #[error("batch failed: {0}")]
    Batch(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code for this error: 1 for usage problems, 2 for bad
    /// input data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
