use std::io;

use thiserror::Error;

/// Failures surfaced by the CLI, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parameter error: {0}")]
    Params(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] mupir_core::Error),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 1 failed check, 2 bad input, 3 protocol failure, 4 resource limit, 5 i/o.
    pub fn exit_code(&self) -> i32 {
        use mupir_core::Error as E;
        match self {
            Self::CheckFailed(_) => 1,
            Self::Params(_) | Self::Config(_) => 2,
            Self::Core(e) => match e {
                E::Domain(_) | E::InvalidParams(_) | E::UnknownUser(_) => 2,
                E::Structural(_) | E::Decode(_) | E::Protocol(_) => 3,
                E::Overflow(_) | E::TooLarge { .. } | E::InsufficientSamples(_) => 4,
                E::Io(_) => 5,
            },
            Self::Io(_) => 5,
        }
    }
}
