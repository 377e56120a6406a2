use thiserror::Error;

/// Errors produced by the emission models, the fitting routines and the
/// file-format parsers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("breakdown: local field {field:.6e} V/m exceeds limit {limit:.6e} V/m")]
    Breakdown { field: f64, limit: f64 },

    #[error(
        "device never turns on: threshold {threshold:.6e} A not reached below {v_upper:.6e} V \
         (current there {current_at_upper:.6e} A)"
    )]
    NeverTurnsOn {
        threshold: f64,
        v_upper: f64,
        current_at_upper: f64,
    },

    #[error("inconsistent measurement: {measured:.6e} A exceeds vacuum current {vacuum:.6e} A")]
    InconsistentMeasurement { measured: f64, vacuum: f64 },

    #[error("insufficient data: {usable} usable points ({dropped} dropped), need at least {required}")]
    InsufficientData {
        usable: usize,
        dropped: usize,
        required: usize,
    },

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unphysical fit: slope B = {slope:.6e} V must be positive")]
    UnphysicalFit { slope: f64 },

    #[error(
        "no convergence after {iterations} iterations (last iterate C = {prefactor:.6e}, B = {slope:.6e})"
    )]
    NonConvergence {
        iterations: usize,
        prefactor: f64,
        slope: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed user input (files, flags), as
    /// opposed to model or fit failures.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Config { .. } | Error::Io(_))
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
