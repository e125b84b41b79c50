use std::fmt;
use std::path::Path;

/// Process exit status, fixed so shell pipelines can branch on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Failure = 1,
    BadInput = 2,
    MissingArtifact = 3,
    Provider = 4,
    Bind = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(Exit::BadInput, message)
    }

    pub fn missing(path: &Path, hint: &str) -> Self {
        Self::new(
            Exit::MissingArtifact,
            format!("{} not found (run `taxolint {hint}` first)", path.display()),
        )
    }

    pub fn provider(message: impl Into<String>) -> Self {
        Self::new(Exit::Provider, message)
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::new(Exit::Failure, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
