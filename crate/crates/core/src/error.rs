use thiserror::Error;

pub type Result<T, E = ChoiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ChoiceError {
    #[error("invalid universe: {0}")]
    Universe(String),
    #[error("invalid assortment: {0}")]
    Assortment(String),
    #[error("dataset validation failed: {0}")]
    Dataset(String),
    #[error("invalid model parameters: {0}")]
    Model(String),
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
