use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an estimator.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A dataset file failed validation. `row` is 1-based over data rows.
    #[error("row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical degeneracy: {0}")]
    Numeric(String),

    #[error("{stage} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        /// Best iterate reached before giving up.
        best: Vec<f64>,
    },

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Ingestion { .. } | Error::MissingColumn(_) | Error::Csv(_) | Error::Io { .. } => 2,
            Error::Json(_) => 2,
            Error::Domain(_)
            | Error::Invariant(_)
            | Error::Fit(_)
            | Error::Numeric(_)
            | Error::NotConverged { .. }
            | Error::Undefined(_) => 3,
        }
    }
}
