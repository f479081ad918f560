//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by validation, numerics and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A regime predicate required by the operation does not hold.
    #[error("parameter regime violated: `{flag}` does not hold")]
    Regime { flag: &'static str },

    /// The integrator produced a non-finite state.
    #[error("integration diverged at t = {t}")]
    Diverged { t: f64 },

    /// Solver or run configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// No condition set matched where the tables promise a partition.
    #[error("classification inconsistency: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than by numerics or I/O.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::Domain(_) | Error::Regime { .. } | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
