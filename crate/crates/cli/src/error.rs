use incentive_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or config; exit code 2.
    #[error("{0}")]
    Usage(String),

    /// A `--check` or validation criterion failed; exit code 1.
    #[error("{0}")]
    CheckFailed(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidGame(_)
                | CoreError::InvalidPopulation(_)
                | CoreError::InvalidParameter(_)
                | CoreError::InvalidOmega(_)
                | CoreError::NeutralSelection
                | CoreError::SymbolicCapExceeded { .. }
                | CoreError::BelowThreshold { .. } => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
