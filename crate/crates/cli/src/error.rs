use thiserror::Error;

/// CLI failures, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values. Exit code 1.
    #[error("usage: {0}")]
    Usage(String),
    /// Anything that fails after the inputs were accepted. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<sabnn_core::Error> for CliError {
    fn from(e: sabnn_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
