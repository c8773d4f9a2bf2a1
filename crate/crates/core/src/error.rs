use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range.
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// A precondition of an operation does not hold for the given inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested instance would exceed a configured resource budget.
    #[error("resource refusal: {0}")]
    ResourceRefusal(String),

    /// A quantity that is mathematically divergent for these parameters.
    #[error("divergent: {0}")]
    Divergent(String),

    /// A numerical routine failed to reach its target accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Not enough data to carry out an estimation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
