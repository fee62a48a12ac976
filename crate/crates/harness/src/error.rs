use std::path::PathBuf;

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
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {}", .0.join(", "))]
    Validation(Vec<String>),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
            Self::Validation(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<nlse_recovery::Error> for HarnessError {
    fn from(e: nlse_recovery::Error) -> Self {
        use nlse_recovery::Error as E;
        match e {
            E::NonFiniteField { .. } | E::NonFiniteAdjoint { .. } | E::NonFinite(_) => {
                Self::Numerical(e.to_string())
            }
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<nlse_recovery::RecoveryError> for HarnessError {
    fn from(e: nlse_recovery::RecoveryError) -> Self {
        match e {
            nlse_recovery::RecoveryError::Core(e) => e.into(),
            d @ nlse_recovery::RecoveryError::Diverged { .. } => Self::Numerical(d.to_string()),
        }
    }
}

impl From<nlse_recovery::unfolding::TrainingError> for HarnessError {
    fn from(e: nlse_recovery::unfolding::TrainingError) -> Self {
        match e {
            nlse_recovery::unfolding::TrainingError::Core(e) => e.into(),
            d => Self::Numerical(d.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
