use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An operation received a field in the wrong domain or on the wrong grid.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A grid, bank or policy cannot support the requested computation.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// A serialized field could not be decoded.
    #[error("format error: {0}")]
    Format(String),
    /// A fit or iteration produced no usable numbers.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! param_err {
    ($($arg:tt)*) => { $crate::error::Error::Parameter(format!($($arg)*)) };
}
macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Configuration(format!($($arg)*)) };
}
pub(crate) use config_err;
pub(crate) use param_err;
