use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("missing artifact {path} (produce it with `xai-chest {producer}`)")]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error(transparent)]
    Core(#[from] xai_chest_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub mod exit_code {
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const NUMERIC: i32 = 5;
    pub const MISSING_ARTIFACT: i32 = 6;
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        HarnessError::Format {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use xai_chest_core::Error as E;
        match self {
            HarnessError::Config(_) => exit_code::CONFIG,
            HarnessError::Io { .. } | HarnessError::Format { .. } => exit_code::IO,
            HarnessError::MissingArtifact { .. } => exit_code::MISSING_ARTIFACT,
            HarnessError::Core(e) => match e {
                E::Config(_) | E::Size { .. } => exit_code::CONFIG,
                E::Io(_) | E::Parse { .. } | E::Version { .. } => exit_code::IO,
                E::NonFinite(_) | E::Degenerate(_) | E::Bounds { .. } => exit_code::NUMERIC,
            },
        }
    }
}

/// Fails with a dependency error when `path` does not exist.
pub fn require(path: &Path, producer: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(HarnessError::MissingArtifact {
            path: path.to_path_buf(),
            producer,
        })
    }
}
