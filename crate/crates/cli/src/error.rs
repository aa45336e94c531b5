use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("{0}")]
    Parse(String),
    /// Well-formed input describing an invalid problem.
    #[error("{0}")]
    Validation(String),
    #[error("regression: {0}")]
    Regression(String),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Regression(_) => 3,
        }
    }
}

impl From<consensus_core::Error> for CliError {
    fn from(e: consensus_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
