use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure in stage `{stage}`: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: calderon_core::Error,
    },

    #[error("stage `{stage}` failed its checks: {detail}")]
    Check { stage: &'static str, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed artifact: {detail}")]
    Format { path: PathBuf, detail: String },
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io { path: path.to_owned(), source }
    }

    pub fn format(path: &Path, detail: impl Into<String>) -> Self {
        LabError::Format { path: path.to_owned(), detail: detail.into() }
    }

    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures and failed checks, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical { .. } | LabError::Check { .. } => 3,
            LabError::Io { .. } | LabError::Format { .. } => 1,
        }
    }
}

/// Tags a core error with the stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> LabResult<T>;
}

impl<T> StageExt<T> for calderon_core::Result<T> {
    fn stage(self, stage: &'static str) -> LabResult<T> {
        self.map_err(|source| LabError::Numerical { stage, source })
    }
}
