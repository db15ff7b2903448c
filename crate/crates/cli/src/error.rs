use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] z2frames::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Process exit code for a failure that prevented the run from finishing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => crate::EXIT_CONFIG,
            _ => crate::EXIT_INTERNAL,
        }
    }
}
