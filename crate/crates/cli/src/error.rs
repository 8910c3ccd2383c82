use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    Invalid(#[source] memlab_core::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("experiment failed: {0}")]
    Runtime(#[source] memlab_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 1,
            CliError::Output { .. } | CliError::Runtime(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
