use thiserror::Error;

/// Failures surfaced by the command-line front end, each tied to a stable
/// process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration and flags.
    #[error("config error: {0}")]
    Config(String),

    /// Count data that does not match the CSV schema or lacks required rows.
    #[error("data error: {0}")]
    Schema(String),

    /// Estimation failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    /// Maps an estimation error to the data or numerical class.
    pub fn from_estimation(err: qellip::Error) -> Self {
        use qellip::Error as E;
        match err {
            E::MissingSettings(_) | E::InvalidData(_) | E::Unidentifiable(_) => CliError::Schema(err.to_string()),
            E::InvalidParameter { .. } | E::GrazingIncidence { .. } => CliError::Config(err.to_string()),
            _ => CliError::Numerical(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
