use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or missing inputs; exit code 1.
    #[error("{0}")]
    Validation(String),

    /// Failure while running a valid command; exit code 2.
    #[error(transparent)]
    Runtime(#[from] deepcf::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn invalid(e: deepcf::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
