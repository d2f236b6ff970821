use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Numerical(qel_core::Error),

    #[error("{0}")]
    Truncated(qel_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) | Self::Io(_) => 3,
            Self::Truncated(_) => 4,
        }
    }
}

impl From<qel_core::Error> for CliError {
    fn from(e: qel_core::Error) -> Self {
        use qel_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::Unstable { .. } | E::Domain(_) => {
                Self::Config(e.to_string())
            }
            E::NumericalInstability { .. } | E::Precision { .. } => Self::Numerical(e),
            E::Truncated { .. } => Self::Truncated(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}
