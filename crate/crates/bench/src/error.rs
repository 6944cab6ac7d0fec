use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] compactknap::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, BenchError::Core(compactknap::Error::SolverFailure(_)))
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
