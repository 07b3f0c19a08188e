use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] lfreadout::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed {what}: {message}")]
    Malformed {
        path: PathBuf,
        what: &'static str,
        message: String,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 invalid config, 3 capacity, 4 I/O or unreadable inputs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Core(lfreadout::Error::Capacity { .. }) => 3,
            Self::Core(
                lfreadout::Error::Parse { .. }
                | lfreadout::Error::InvalidProblem(_)
                | lfreadout::Error::InvalidModel(_)
                | lfreadout::Error::DecayRate { .. }
                | lfreadout::Error::OutOfRange { .. }
                | lfreadout::Error::NotPowerOfTwo(_)
                | lfreadout::Error::ZeroNorm,
            ) => 2,
            Self::Io { .. } | Self::Malformed { .. } => 4,
            Self::Core(_) => 1,
        }
    }
}
