use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("prime generation failed after {0} attempts")]
    PrimeGenFailure(usize),
    #[error("value out of range: {0}")]
    OutOfRange(&'static str),
    #[error("witness does not satisfy the statement")]
    WitnessMismatch,
    #[error("malformed statement: {0}")]
    Malformed(String),
}

impl CryptoError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CryptoError::PrimeGenFailure(_) => "PRIME_GEN_FAILURE",
            CryptoError::OutOfRange(_) => "OUT_OF_RANGE",
            CryptoError::WitnessMismatch => "WITNESS_MISMATCH",
            CryptoError::Malformed(_) => "MALFORMED",
        }
    }
}
