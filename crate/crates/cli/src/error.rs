use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        source: zktorus::Error,
    },

    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    /// 1 for bad input, 2 for numerical or certification failures.
    pub fn exit_code(&self) -> i32 {
        use zktorus::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::ChecksFailed { .. } => 2,
            CliError::Core { source, .. } => match source {
                E::InvalidArgument(_) | E::TruncationMismatch(_) | E::Overflow(_) => 1,
                E::CertificationFailed(_)
                | E::PrecisionExhausted { .. }
                | E::DegenerateTheta { .. }
                | E::GramianSingular(_)
                | E::EigenFailure(_)
                | E::StepSize(_) => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Context<T> {
    fn context(self, what: &'static str) -> CliResult<T>;
}

impl<T> Context<T> for zktorus::Result<T> {
    fn context(self, what: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what,
            source,
        })
    }
}
