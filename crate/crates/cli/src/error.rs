use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] qtransition::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed manifest: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{failed} of {total} sweep runs failed")]
    SweepFailed { failed: usize, total: usize, code: u8 },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        use qtransition::Error as E;
        match self {
            CliError::Config(_) | CliError::Parse { .. } | CliError::Manifest { .. } => 2,
            CliError::Core(E::Instability { .. } | E::Diverged { .. } | E::NonFinite { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 4,
            CliError::SweepFailed { code, .. } => *code,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
