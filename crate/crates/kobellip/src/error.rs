use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is malformed (zero vector, bad sample count, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A disc parameter set cannot be realized (negative coefficient square, ...).
    #[error("infeasible disc parameters: {0}")]
    Infeasible(String),

    /// A competitor disc failed interpolation or containment certification.
    #[error("candidate rejected: {0}")]
    Rejected(String),

    /// An internal consistency check failed; indicates a bug or a genuinely
    /// degenerate configuration worth surfacing rather than papering over.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;
