use std::fmt;

use crate::grid::Trajectory;

pub type Result<T> = std::result::Result<T, WedError>;

/// Errors raised by the toolkit.
///
/// Configuration problems and numerical failures are kept apart so that the
/// command line front end can map them onto distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum WedError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected length {expected}, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error at time node {node}: {what}")]
    Evaluation { node: usize, what: String },

    #[error("beta is set-valued at {at} and no selection is configured")]
    SetValued { at: f64 },

    #[error("resolvent bracket failure for s = {s}, lambda = {lambda}")]
    ResolventBracket { s: f64, lambda: f64 },

    #[error("stalled line search at iteration {iteration} (value {value})")]
    StalledLineSearch {
        iteration: usize,
        value: f64,
        last: Box<Trajectory>,
    },

    #[error("step failure at t = {t}: {diagnostics}")]
    StepFailure { t: f64, diagnostics: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WedError {
    pub fn config(msg: impl fmt::Display) -> Self {
        WedError::Config(msg.to_string())
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(self, WedError::Config(_) | WedError::Shape { .. } | WedError::Domain(_))
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(WedError::Shape { expected, found })
    }
}
