//! Error type shared across the simulation crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a closed-form expression
    /// (e.g. Δ = 0 in the dispersive coupling formula).
    #[error("domain error: {0}")]
    Domain(String),

    /// A method was invoked outside the regime where it is valid
    /// (e.g. the analytic separatrix classifier with δ ≠ 0).
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// Adaptive integration could not proceed; carries the last accepted
    /// state so callers can inspect or report partial results.
    #[error("integration failure at t = {t:.6e} s: {reason}")]
    Integration {
        t: f64,
        reason: String,
        last_state: Vec<f64>,
    },

    /// Two supposedly equivalent internal computations disagree.
    #[error("internal consistency error: {0}")]
    Inconsistency(String),

    /// Requested Hilbert-space dimension exceeds what the exact solvers accept.
    #[error("dimension overflow: {0}")]
    Dimension(String),

    /// A requested evaluation range is not covered by the data.
    #[error("range error: {0}")]
    Range(String),

    /// Nonlinear fit could not identify its model on the given data.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// Configuration rejected before any compute.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
