use thiserror::Error;

/// Failure categories shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched sizes, malformed inputs, invalid indices.
    #[error("structural error: {0}")]
    Structural(String),

    /// The requested computation exceeds a configured size limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A constraint specification is invalid or infeasible.
    #[error("constraint error: {0}")]
    Constraint(String),

    /// A numerical invariant was violated beyond its tolerance.
    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}
