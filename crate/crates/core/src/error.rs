use thiserror::Error;

use crate::distributions::ValidationReport;

/// Errors raised by the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input object is malformed (bad distribution parameters, bad odds, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A whole problem instance failed validation.
    #[error("invalid instance: {}", .0.summary())]
    InvalidInstance(ValidationReport),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The continuous engine was handed an instance with atoms.
    #[error("continuity error: distribution {index} has an atom; the value engine requires continuous laws")]
    Continuity { index: usize },

    #[error("degenerate support: the shared grid has zero width")]
    DegenerateSupport,

    /// The requested exact computation exceeds the configured state budget.
    #[error("capacity error: {what} needs {needed}, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: usize,
        limit: usize,
    },

    #[error("numerical anomaly: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
