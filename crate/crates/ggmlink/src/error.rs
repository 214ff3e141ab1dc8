use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the stage that can fail:
/// data ingestion, numerical linear algebra inside the sampler, and artifact IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("numerical failure in {context} at sweep {sweep}, group {group}: {detail}")]
    NumericalAbort {
        context: &'static str,
        sweep: usize,
        group: usize,
        detail: String,
    },

    #[error("csv error in {path}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("malformed input in {path}: {detail}")]
    MalformedInput { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn csv(path: impl AsRef<std::path::Path>, source: csv::Error) -> Self {
        Error::Csv { path: path.as_ref().display().to_string(), source }
    }

    pub fn malformed(path: impl AsRef<std::path::Path>, detail: impl Into<String>) -> Self {
        Error::MalformedInput {
            path: path.as_ref().display().to_string(),
            detail: detail.into(),
        }
    }
}
