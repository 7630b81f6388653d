//! Revocation registry backed by a dynamic RSA accumulator.
//!
//! Credential handles are mapped to 128-bit primes and accumulated as
//! `A = base^(prod e) mod N`. The registry publishes `A` and a
//! [`RegistryDelta`] per change; holders keep a [`MembershipWitness`]
//! `w` with `w^e = A` current by replaying deltas, and prove
//! non-revocation in zero knowledge with [`nonrevocation`].

mod accumulator;
pub mod nonrevocation;

pub use accumulator::{
    handle_prime, witness_update, AccumulatorState, MembershipWitness, PublicAccumulator,
    RegistryDelta, RegistryParams, DEFAULT_CAPACITY, HANDLE_BITS,
};
pub use nonrevocation::{prove_nonrevoked, verify_nonrevoked, NonRevocationProof};

use thiserror::Error;
use vaxpass_core::CryptoError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RevocationError {
    #[error("handle is already a member")]
    DuplicateHandle,
    #[error("handle is not a member")]
    NotMember,
    #[error("credential handle has been revoked")]
    Revoked,
    #[error("delta sequence does not continue from epoch {expected} (got {found})")]
    EpochGap { expected: u64, found: u64 },
    #[error("witness is not valid for the current accumulator")]
    StaleWitness,
    #[error("registry is full")]
    RegistryFull,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl RevocationError {
    pub fn code(&self) -> &'static str {
        match self {
            RevocationError::DuplicateHandle => "DUPLICATE_HANDLE",
            RevocationError::NotMember => "NOT_MEMBER",
            RevocationError::Revoked => "REVOKED",
            RevocationError::EpochGap { .. } => "EPOCH_GAP",
            RevocationError::StaleWitness => "STALE_WITNESS",
            RevocationError::RegistryFull => "REGISTRY_FULL",
            RevocationError::Crypto(e) => e.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RevocationError>;
