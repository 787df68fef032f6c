use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed F32R data: {0}")]
    Format(String),
    /// Bad configuration file, flag value or inconsistent inputs.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] seiswork_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            CliError::Config(_) | CliError::Core(seiswork_core::Error::InvalidConfig(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
