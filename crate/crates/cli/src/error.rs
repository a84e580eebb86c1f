use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad command-line value or input file content.
    #[error("{field}: {reason}")]
    Input { field: String, reason: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(#[from] vxr_core::Error),
}

impl CliError {
    pub fn input(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Input {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 input error, 3 precondition error, 4 I/O error, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use vxr_core::Error as E;
        match self {
            CliError::Input { .. } => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                E::InvalidGrid(_)
                | E::InvalidShape { .. }
                | E::InvalidParameter { .. }
                | E::GridMismatch
                | E::Format { .. } => 2,
                E::Precondition(_) | E::ContactAtStart { .. } => 3,
                E::Io(_) => 4,
                E::Inconsistent(_) => 1,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
