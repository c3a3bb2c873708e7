use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input cannot be normalized or fitted (all-zero vector, zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Total wealth drifted beyond the allowed relative tolerance.
    #[error("wealth conservation violated at transaction {transaction}: relative drift {drift:e}")]
    Conservation { transaction: u64, drift: f64 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
