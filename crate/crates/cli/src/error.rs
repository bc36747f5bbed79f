use std::fmt;
use std::io;

use exitlab_core::Error as CoreError;

/// Exit codes: 0 success, 1 io, 2 bad config or input, 3 failed numerics,
/// 4 violated precondition.
#[derive(Debug)]
pub enum CliError {
    /// Config file problem, with the offending line when known.
    Config {
        path: String,
        line: Option<usize>,
        message: String,
    },
    /// Bad command line usage outside any config file.
    Usage(String),
    Core(CoreError),
    Io(io::Error),
}

impl CliError {
    pub fn config(
        path: impl Into<String>,
        line: impl Into<Option<usize>>,
        message: impl Into<String>,
    ) -> Self {
        CliError::Config {
            path: path.into(),
            line: line.into(),
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Core(CoreError::InvalidInput(_))
            | CliError::Core(CoreError::InsufficientSample(_)) => 2,
            CliError::Core(CoreError::NonConvergence { .. })
            | CliError::Core(CoreError::NoRoot { .. }) => 3,
            CliError::Core(CoreError::Precondition(_)) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config {
                path,
                line: Some(line),
                message,
            } => write!(f, "{path}:{line}: {message}"),
            CliError::Config {
                path,
                line: None,
                message,
            } => write!(f, "{path}: {message}"),
            CliError::Usage(message) => write!(f, "{message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}
