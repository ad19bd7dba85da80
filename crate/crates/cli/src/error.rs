//! CLI errors and their exit codes.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] maxplus::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 ok, 1 I/O, 2 configuration, 3 numerical failure, 4 brute-force
    /// budget exceeded.
    pub fn exit_code(&self) -> i32 {
        use maxplus::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::Finiteness { .. } | E::Singular { .. } | E::NonFinite(_) | E::EmptyWitnesses => 3,
                E::BudgetExceeded { .. } => 4,
                _ => 2,
            },
        }
    }
}
