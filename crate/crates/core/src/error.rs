use thiserror::Error;

use crate::counter_machine::ValidationReport;
use crate::exact_num::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("cannot parse rational {input:?}: {reason}")]
    ParseRational { input: String, reason: String },

    #[error("invalid counter machine:\n{0}")]
    InvalidMachine(ValidationReport),

    #[error("usage: {0}")]
    Usage(String),

    /// An enumeration exceeded its configured cap. `at` carries the simulation
    /// time when the overflow happened inside a trajectory.
    #[error("{what}: size {size} exceeds cap {cap}{}", at.as_ref().map(|t| format!(" at t={t}")).unwrap_or_default())]
    Capacity {
        what: &'static str,
        size: usize,
        cap: usize,
        at: Option<Rational>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Attach a simulation time to a capacity error.
    pub fn at_time(self, t: &Rational) -> Self {
        match self {
            Error::Capacity { what, size, cap, at: None } => Error::Capacity {
                what,
                size,
                cap,
                at: Some(t.clone()),
            },
            other => other,
        }
    }
}
