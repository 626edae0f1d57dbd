use fracmorrey_core::Error as CoreError;
use thiserror::Error;

/// Failure of one experiment run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    /// The configuration is invalid; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    /// The run started but a computation failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl RunError {
    pub fn config(path: &str, message: &str) -> Self {
        RunError::Config {
            path: if path.is_empty() { ".".into() } else { path.into() },
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::Numerical(_) | RunError::Io(_) => 3,
        }
    }
}

/// Core numerical failures stay numerical; every other core error means the
/// requested computation is ill-posed and is reported as a config error.
impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Numerical(_) => RunError::Numerical(e.to_string()),
            _ => RunError::config("", &e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.to_string())
    }
}
