use thiserror::Error;

use dualnlg_tensor::TensorError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("dialogue act parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Corpus { path: String, line: usize, message: String },

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error("vocabulary mismatch: {0}")]
    Vocabulary(String),

    #[error("training diverged at epoch {epoch}, step {step}: {reason}")]
    Diverged { epoch: u32, step: u64, reason: String },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("generation: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
