use std::fmt;

use thiserror::Error;

/// A single violated configuration invariant, reported with its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub field: String,
    pub message: String,
}

impl ConfigViolation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_violations(v: &[ConfigViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    Config(Vec<ConfigViolation>),

    #[error("thinning bound {bound} exceeded: rate {rate} at s = {time}")]
    ThinningBound { bound: f64, rate: f64, time: f64 },

    #[error("path extension to {requested} steps exceeds the cap of {cap} steps")]
    PathTooLong { requested: usize, cap: usize },

    #[error("frozen path cannot be extended past t = {horizon}")]
    FrozenPath { horizon: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown validation suite `{0}` (expected coupling, bounds, sausage, percolation or all)")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
