use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {field}: {reason}")]
    Parse { path: PathBuf, field: String, reason: String },
    #[error(transparent)]
    Core(#[from] shortfall_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Output(String),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Parse { .. } => 2,
            HarnessError::Core(e) => match e {
                shortfall_core::Error::Contract(_) => 3,
                _ => 2,
            },
            HarnessError::Io { .. } | HarnessError::Output(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
