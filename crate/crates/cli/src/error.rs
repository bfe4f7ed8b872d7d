use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] surfflow::Error),
}

impl CliError {
    /// Exit code: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 1,
        }
    }
}
