use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] fracpq::Error),
    /// The reconstruction stopped early; partial results were written.
    #[error("reconstruction stopped: {0}")]
    Stopped(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 2 configuration, 3 solver failure, 4 degenerate observations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(e) => match e {
                fracpq::Error::DegenerateObservations { .. } => 4,
                fracpq::Error::Config(_)
                | fracpq::Error::Precondition(_)
                | fracpq::Error::GridMismatch(_)
                | fracpq::Error::InitialDataMismatch { .. } => 2,
                _ => 3,
            },
            CliError::Stopped(_) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
