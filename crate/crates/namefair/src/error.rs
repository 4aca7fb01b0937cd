use std::fmt::Display;
use std::io;
use std::path::Path;

use namefair_core::Error as CoreError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Failure of a command, classified by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, malformed files or inconsistent data (exit code 1).
    #[error("{0}")]
    Validation(String),
    /// Missing or unreadable input, unwritable output (exit code 2).
    #[error("{0}")]
    Io(String),
    /// Non-finite values during training or evaluation (exit code 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    pub fn read(path: &Path, err: io::Error) -> Self {
        CliError::Io(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: impl Display) -> Self {
        CliError::Io(format!("cannot write {}: {err}", path.display()))
    }

    /// Wraps a core error. Parse errors get `context:line:` prefixes so the
    /// message points into the offending file.
    pub fn core(err: CoreError, context: impl Display) -> Self {
        match err {
            CoreError::NonFinite(_) | CoreError::NonFiniteLoss { .. } => {
                CliError::Numerical(format!("{context}: {err}"))
            }
            CoreError::Parse { line, message } => CliError::Validation(format!("{context}:{line}: {message}")),
            other => CliError::Validation(format!("{context}: {other}")),
        }
    }
}

/// Attaches context to core results.
pub trait Context<T> {
    fn context(self, context: impl Display) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, CoreError> {
    fn context(self, context: impl Display) -> Result<T> {
        self.map_err(|e| CliError::core(e, context))
    }
}
