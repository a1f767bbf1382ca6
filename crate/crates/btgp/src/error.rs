//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, numerical routines, inference,
/// and policy optimization.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its domain (non-positive, non-finite, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for the given model variant.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Input data violates a structural requirement (ordering, range,
    /// zero increments, saturated readings, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Maximum-likelihood fitting failed on every start.
    #[error("fit failed: {0}")]
    Fit(String),

    /// Model selection had no successfully fitted candidate.
    #[error("selection failed: {0}")]
    Selection(String),

    /// A scanned objective had no interior maximum/minimum.
    #[error("no interior maximum: {0}")]
    NoInteriorMaximum(String),

    /// A policy objective is degenerate (e.g. vanishing expected cycle length).
    #[error("degenerate policy: {0}")]
    DegeneratePolicy(String),

    /// Probability mass left unabsorbed after the allowed number of
    /// inspection epochs; a larger `n_max` (or a reachable threshold)
    /// is required.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// A numerical optimizer failed to produce a usable result.
    #[error("optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
