use std::path::{Path, PathBuf};

use forme_core::ErrorClass;
use serde_json::json;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] forme_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn file(path: &Path, source: std::io::Error) -> Self {
        CliError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Core(e) => e.class(),
            CliError::Usage(_) => ErrorClass::Config,
            CliError::File { .. } => ErrorClass::Io,
        }
    }

    /// 1 for configuration errors, 2 for I/O, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 1,
            ErrorClass::Io => 2,
            ErrorClass::Numerical => 3,
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let class = match self.class() {
            ErrorClass::Config => "config",
            ErrorClass::Io => "io",
            ErrorClass::Numerical => "numerical",
        };
        let mut err = json!({
            "class": class,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Core(forme_core::Error::PageImage { page_index, path, .. }) => {
                err["page_index"] = json!(page_index);
                err["path"] = json!(path);
            }
            CliError::File { path, .. } => err["path"] = json!(path),
            _ => {}
        }
        json!({ "error": err })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}
