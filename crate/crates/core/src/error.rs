use thiserror::Error;

/// Errors raised by the numerical layers.
///
/// The variants are grouped so that front ends can map them onto distinct
/// exit codes: parameter problems, capacity overflows, and numerical
/// breakdowns.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("support capacity exceeded: {needed} atoms requested, limit is {limit}")]
    Capacity { needed: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("truncation K={k} too small: achievable tail mass {achievable:e} exceeds {requested:e}")]
    TailTooLarge {
        k: usize,
        achievable: f64,
        requested: f64,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
