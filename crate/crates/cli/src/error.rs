use cslab_core::error::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure in {stage}: {source}")]
    Numeric { stage: &'static str, source: GeomError },
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for numeric or invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric { .. } | CliError::Invariant(_) => 3,
        }
    }
}

/// Tags a core error with the pipeline stage it came from.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, GeomError> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { stage, source })
    }
}
