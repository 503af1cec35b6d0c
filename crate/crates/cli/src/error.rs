use std::path::Path;

use qsuggest_core::store::StoreError;
use thiserror::Error;

/// A failed command. The variant picks the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub const SUCCESS: u8 = 0;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn store(action: &str, err: StoreError) -> Self {
        let msg = format!("cannot {action} artifacts: {err}");
        match err {
            StoreError::Io { .. }
            | StoreError::MissingManifest(_)
            | StoreError::MissingFile(_)
            | StoreError::Locked(_) => CliError::Io(msg),
            StoreError::UnsupportedVersion { .. }
            | StoreError::DigestMismatch { .. }
            | StoreError::Format { .. }
            | StoreError::UnknownSegmenter(_) => CliError::Data(msg),
        }
    }
}
