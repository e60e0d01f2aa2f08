use std::path::Path;

use multidx_service::ServiceError;

/// Failures grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub(crate) fn read(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub(crate) fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Internal(format!("cannot write {}: {e}", path.display()))
    }
}

impl From<multidx_core::Error> for CliError {
    fn from(e: multidx_core::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Internal(m) => CliError::Internal(m),
            other => CliError::Data(other.to_string()),
        }
    }
}
