use thiserror::Error;

use crate::linkmodels::LinkKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pair sum {x} lies outside the domain of the {link} link")]
    Domain { link: LinkKind, x: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("estimate unavailable: {0}")]
    Unavailable(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("pair ({0}, {1}) was not requested in the scenario")]
    UnknownPair(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
