use thiserror::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
        }
    }

    pub(crate) fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }
}

impl From<activehne_core::Error> for CliError {
    fn from(e: activehne_core::Error) -> Self {
        let msg = e.to_string();
        if e.is_data_error() {
            CliError::Data(msg)
        } else if e.is_numeric_divergence() {
            CliError::Divergence(msg)
        } else {
            CliError::Config(msg)
        }
    }
}
