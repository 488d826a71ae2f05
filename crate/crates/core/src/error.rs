use thiserror::Error;

/// Errors raised by the detector library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The acceptance level cannot be turned into a consistent Beta alternative.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Caller violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An indicator column is not a member of the configuration set.
    #[error("inadmissible configuration {config} at index {index}")]
    Inadmissible { index: usize, config: String },

    /// The requested configuration set is too large to enumerate.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Observations are malformed (non-finite values, too short, ragged).
    #[error("data error: {0}")]
    Data(String),

    /// Two inputs disagree on their shape.
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
