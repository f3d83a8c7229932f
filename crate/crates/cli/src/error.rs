use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] ncube_core::Error),
}

impl CliError {
    /// 3 for bad input, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use ncube_core::LinalgError;
        match self {
            CliError::Core(ncube_core::Error::Linalg(LinalgError::NoConvergence { .. } | LinalgError::NonFinite)) => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<ncube_core::LinalgError> for CliError {
    fn from(e: ncube_core::LinalgError) -> Self {
        CliError::Core(e.into())
    }
}
