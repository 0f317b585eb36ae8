use thiserror::Error;

/// Failure modes shared by every analysis in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A dense object would exceed the configured size cap.
    #[error("too large: {what} needs {needed} entries, cap is {cap}")]
    TooLarge {
        what: String,
        needed: u128,
        cap: u128,
    },

    #[error("tensor is not normal: {0}")]
    NotNormal(String),

    #[error("period undetected: {0}")]
    PeriodUndetected(String),

    #[error("canonical-form decomposition failed: {0}")]
    DecompositionFailed(String),

    /// Injectivity was not reached within the theoretical length bound.
    #[error("injectivity not reached within length {cap}; tensor is not normal or the rank tolerance is off")]
    NotNormalOrBug { cap: usize },

    /// Block-injectivity was not reached within the theoretical length bound.
    #[error("block-injectivity not reached within length {cap}")]
    DecompositionSuspect { cap: usize },

    #[error("tensor is not injective at blocking length {length}: span rank {rank} < {needed}")]
    NotInjective {
        length: usize,
        rank: usize,
        needed: usize,
    },

    #[error("blocking length {length} is below the block-injectivity length {required}")]
    NotBlockInjective { length: usize, required: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
