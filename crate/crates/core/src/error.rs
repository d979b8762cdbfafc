use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("chunk size {0} out of range (1..=16)")]
    ChunkSize(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),

    #[error("transform block is not invertible: {0}")]
    SingularBlock(&'static str),

    #[error("resource budget exceeded: need {needed}, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("guess space exhausted after {guesses} vinegar guesses without a verified preimage")]
    Exhausted { guesses: u64 },

    #[error("malformed encoding: {0}")]
    Codec(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}

/// Fails with [`Error::DimensionMismatch`] unless `found == expected`.
pub(crate) fn ensure_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::dim(context, expected, found))
    }
}
