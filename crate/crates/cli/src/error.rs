use thiserror::Error;

/// Failures grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, keys or values.
    #[error("config error: {0}")]
    Config(String),
    /// Missing or malformed input files.
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0:#}")]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Internal(_) => 4,
        }
    }
}

impl From<topolayer::dataset::DatasetError> for CliError {
    fn from(e: topolayer::dataset::DatasetError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<topolayer_nn::NnError> for CliError {
    fn from(e: topolayer_nn::NnError) -> Self {
        match e {
            topolayer_nn::NnError::Config(m) => Self::Config(m),
            e @ topolayer_nn::NnError::EmptyDataset(_) => Self::Data(e.to_string()),
            other => Self::Internal(other.into()),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Internal(anyhow::anyhow!("{}: {e}", path.display()))
}
