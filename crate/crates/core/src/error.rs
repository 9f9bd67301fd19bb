use thiserror::Error;

/// Errors raised by the incentive-cost library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("omega must lie strictly between 0 and 1, got {0}")]
    InvalidOmega(f64),

    #[error("operation requires non-neutral selection (beta > 0)")]
    NeutralSelection,

    #[error("population size {n} exceeds the symbolic cap {cap}")]
    SymbolicCapExceeded { n: usize, cap: usize },

    #[error("singular linear system at row {0}")]
    SingularSystem(usize),

    #[error("analysis failure: {0}")]
    Analysis(String),

    #[error("beta = {beta} does not exceed the threshold beta* = {beta_star}")]
    BelowThreshold { beta: f64, beta_star: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
