use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("permutation {0} is not in class {1}")]
    NotInClass(String, String),
    #[error("criticality: {0}")]
    Criticality(String),
    #[error("offspring cutoff {cutoff} too small: residual tail mass {tail:e}")]
    NeedsLargerCutoff { cutoff: usize, tail: f64 },
    #[error("gave up after {attempts} attempts ({detail})")]
    RetryLimit { attempts: u64, detail: String },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("realization too shallow: {0}")]
    InsufficientRealization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
