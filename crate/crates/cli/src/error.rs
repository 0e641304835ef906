use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unparseable input files, parameters outside their domain.
    #[error("{0}")]
    Usage(String),
    /// Closed form and oracle disagree beyond tolerance, or an evaluation failed.
    #[error("{0}")]
    Failure(String),
    /// The requested work exceeds a configured cap.
    #[error("{0}")]
    Capacity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Failure(_) => 1,
            Self::Usage(_) => 2,
            Self::Capacity(_) => 3,
        }
    }
}

impl From<mssvs::Error> for CliError {
    fn from(e: mssvs::Error) -> Self {
        match e {
            mssvs::Error::ParameterDomain { .. } | mssvs::Error::Discriminant { .. } => Self::Usage(e.to_string()),
            other => Self::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Failure(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
