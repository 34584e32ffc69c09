use std::path::Path;

use sqg_core::SqgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("solver aborted: {0}")]
    Aborted(SqgError),

    #[error(transparent)]
    Core(#[from] SqgError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for solver aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Aborted(_) => 3,
            _ => 2,
        }
    }
}
