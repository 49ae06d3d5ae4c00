use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    /// The channel has full column rank, so no transmit direction is invisible
    /// to the communication receiver and NSP sharing is impossible.
    #[error("no null space: channel rank {rank} leaves nothing of {num_tx} transmit dimensions")]
    NoNullSpace { rank: usize, num_tx: usize },

    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
