//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by set construction, schedules, the solver, rate
/// calculators, cone computations, and config parsing.
#[derive(Debug, Error)]
pub enum Error {
    /// A point had a different dimension than the object it was used with.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A set definition failed validation (empty finite set, non-orthonormal
    /// frame, non-unit normal, inverted box bounds, non-positive radius, …).
    #[error("invalid set: {0}")]
    InvalidSet(String),

    /// A schedule definition failed validation (value outside (0, 1],
    /// non-monotone explicit list where required, bad decay factor, …).
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// A solver configuration failed validation.
    #[error("invalid config{}: {message}", path_suffix(.path))]
    InvalidConfig {
        /// JSON-pointer-style location of the offending field, when known.
        path: String,
        message: String,
    },

    /// A rate or radius formula was evaluated outside its precondition.
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),

    /// A cone or regularity computation had no admissible data
    /// (for example no base points within the requested radius).
    #[error("no admissible data: {0}")]
    NoData(String),

    /// The requested operation is not available for this set or scenario.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An unknown catalog example or CLI scenario id.
    #[error("unknown id: {0}")]
    UnknownId(String),

    /// Input/output failure (config files, CSV/JSON outputs).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure outside config parsing.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn path_suffix(path: &str) -> String {
    if path.is_empty() {
        String::new()
    } else {
        format!(" at {path}")
    }
}

impl Error {
    /// Convenience constructor for config validation failures.
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
