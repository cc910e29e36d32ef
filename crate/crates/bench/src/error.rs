use std::path::PathBuf;

use vqls::VqlsError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Solver(#[from] VqlsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn spec_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(BenchError::Spec(msg.into()))
}

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
    let path = path.into();
    move |source| BenchError::Io { path, source }
}
