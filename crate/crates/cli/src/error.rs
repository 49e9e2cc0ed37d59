use thiserror::Error;

/// Errors surfaced by the command-line front end, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or out-of-range configuration (exit code 2).
    #[error("config error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    /// Truncation leakage, divergence or another numerical failure (exit code 3).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Attach context to a core error, classifying it as numeric or as bad input.
    pub fn from_core(context: &str, err: photon_qec::Error) -> Self {
        if err.is_numeric() {
            CliError::Numeric(format!("{context}: {err}"))
        } else {
            CliError::Config(vec![format!("{context}: {err}")])
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) trait Context<T> {
    fn ctx(self, context: &str) -> CliResult<T>;
}

impl<T> Context<T> for photon_qec::Result<T> {
    fn ctx(self, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(context, e))
    }
}
