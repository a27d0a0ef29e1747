use std::io;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arithmetic overflow while computing {0}")]
    Overflow(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("enumeration of {what} would need {size} cases, above the cap of {cap}")]
    TooLarge { what: String, size: u128, cap: u128 },

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("decode failed: {0}")]
    Decode(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("unknown user {0}")]
    UnknownUser(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
