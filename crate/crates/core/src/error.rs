use std::path::PathBuf;

use crate::netlist::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("netlist failed validation with {} diagnostic(s)", .0.len())]
    Validation(Vec<Diagnostic>),

    /// `I - S_II P` is numerically singular: a lossless trapped mode sits on
    /// the evaluation frequency.
    #[error("interconnection is singular at {frequency} Hz (condition estimate {condition:.3e})")]
    Resonance { frequency: f64, condition: f64 },

    #[error("input pulse has {fraction:.3e} of its energy outside the swept band")]
    OutOfBand { fraction: f64 },

    #[error("degenerate Jacobian: parameter(s) {0:?} have no influence on the residual")]
    DegenerateJacobian(Vec<String>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input (files, configs, netlists) as
    /// opposed to numerical failures during a run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Unsupported(_)
                | Error::Parse { .. }
                | Error::Config(_)
                | Error::Io { .. }
        )
    }
}
