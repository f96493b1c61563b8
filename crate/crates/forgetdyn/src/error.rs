use std::path::Path;

use forgetdyn_core::Error as CoreError;

/// Command failures, each mapped to a stable process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    #[error("{0}")]
    Parse(String),
    /// Shape or class-id mismatch between inputs (exit 3).
    #[error("{0}")]
    Data(String),
    /// Nothing to report (exit 4).
    #[error("{0}")]
    Empty(String),
    /// The augmentation experiment failed (exit 5).
    #[error("experiment failed: {0}")]
    Experiment(String),
    /// Writing outputs failed (exit 1).
    #[error("{context}: {source}")]
    Output {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Data(_) => 3,
            CliError::Empty(_) => 4,
            CliError::Experiment(_) => 5,
            CliError::Output { .. } => 1,
        }
    }

    pub fn parse(path: &Path, msg: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{}: {msg}", path.display()))
    }

    pub fn output(path: &Path, source: std::io::Error) -> Self {
        CliError::Output {
            context: format!("writing {}", path.display()),
            source,
        }
    }

    /// Classifies a core error raised while processing `path`.
    pub fn from_core(path: &Path, err: CoreError) -> Self {
        let msg = format!("{}: {err}", path.display());
        match err {
            CoreError::DimensionMismatch { .. } | CoreError::InvalidClassId { .. } => {
                CliError::Data(msg)
            }
            CoreError::EmptyTrace | CoreError::EmptyRanking => CliError::Empty(msg),
            _ => CliError::Parse(msg),
        }
    }
}
