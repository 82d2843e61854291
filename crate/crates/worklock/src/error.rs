use thiserror::Error;

/// Errors produced by state construction and the physics operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid unitary: {0}")]
    InvalidUnitary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested quantity is defined only for states diagonal in the
    /// energy eigenbasis; callers holding a coherent state should use
    /// `accessible_work` instead.
    #[error("coherent input: {0}")]
    CoherentInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
