use thiserror::Error;
use treespec::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("exceptional point: {0}")]
    Exceptional(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Exceptional(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Exceptional(_) => CliError::Exceptional(e.to_string()),
            CoreError::InvalidEdge(_)
            | CoreError::InvalidPotential(_)
            | CoreError::InvalidGraph(_)
            | CoreError::GeneratorOutOfRange { .. }
            | CoreError::InvalidArgument(_)
            | CoreError::SizeCap(_)
            | CoreError::Unsupported(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
