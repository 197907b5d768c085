use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("numerical failure in {routine}: {diagnostics}")]
    Numerical { routine: &'static str, diagnostics: String },

    #[error("calibration failed at t = {t}: {reason}")]
    Calibration { t: f64, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("structural error: {0}")]
    Structural(String),

    /// The shifted intensity went negative, so the model is not of Cox type.
    #[error("negative intensity {value:e} at t = {t} for {params}")]
    NegativeIntensity { t: f64, value: f64, params: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::ParameterDomain(msg.into())
}
