use thiserror::Error;

/// Failures split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Prefixes the message with where it happened.
    pub fn context(self, what: &str) -> CliError {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
        }
    }
}

impl From<surfcrit::Error> for CliError {
    fn from(e: surfcrit::Error) -> Self {
        use surfcrit::Error as E;
        match e {
            E::InvalidSpec(_)
            | E::Embedding { .. }
            | E::ProfileNotPositive { .. }
            | E::ProfileNotNormalized { .. }
            | E::InvalidArgument(_)
            | E::HarmonicIndex { .. }
            | E::QuadratureOrder { .. }
            | E::BadWeight(_)
            | E::Parse { .. } => CliError::Config(e.to_string()),
            E::DegeneratePanel { .. }
            | E::NegativeKappa(_)
            | E::NonConvergence { .. }
            | E::NoSignChange { .. }
            | E::Singular
            | E::Io(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("output: {e}"))
    }
}
