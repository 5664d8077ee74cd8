use std::path::{Path, PathBuf};

use petviashvili::guess::GuessError;
use petviashvili::iteration::IterationError;
use petviashvili::shooting::ShootingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<IterationError> for CliError {
    fn from(e: IterationError) -> Self {
        match e {
            IterationError::InvalidExponent { .. }
            | IterationError::InvalidGamma { .. }
            | IterationError::InvalidStopRule => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ShootingError> for CliError {
    fn from(e: ShootingError) -> Self {
        match e {
            ShootingError::RadiusOutOfRange { .. } | ShootingError::TooFewCells(_) => {
                CliError::Config(e.to_string())
            }
            ShootingError::Iteration(inner) => inner.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GuessError> for CliError {
    fn from(e: GuessError) -> Self {
        CliError::Config(format!("initial guess: {e}"))
    }
}
