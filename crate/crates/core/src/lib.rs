//! Proving machinery shared by the credential, revocation and ledger layers.
//!
//! Everything lives in hidden-order (RSA-type) groups: the system commitment
//! group, issuer signature groups and accumulator groups. Proofs are
//! discrete-log representation sigma protocols made non-interactive with a
//! SHA-256 Fiat-Shamir [`Transcript`]. Responses are computed over the
//! integers, so one secret may appear in relations over different moduli.

pub mod bigint;
pub mod canonical;
pub mod commitment;
mod error;
pub mod params;
pub mod prime;
pub mod range;
pub mod serde_int;
pub mod sigma;
pub mod transcript;

pub use commitment::{commit, Commitment};
pub use error::CryptoError;
pub use params::{setup_params, RsaGroup, SecurityProfile, SystemParams};
pub use prime::hash_to_prime;
pub use sigma::{
    or_prove, or_verify, sigma_prove, sigma_verify, ClauseProof, CompoundProof, OrProof,
    OrWitness, ProofBuilder, ProofFailure, Relation, SecretId, SigmaProof, Statement,
};
pub use transcript::{transcript_challenge, Transcript};

/// Fiat-Shamir challenge length.
pub const CHALLENGE_BITS: u32 = 256;
/// Statistical hiding slack added to every proof randomness range.
pub const SLACK_BITS: u32 = 80;
/// Upper bound (exclusive, as a bit length) on committed and signed messages.
pub const MESSAGE_BITS: u32 = 256;

pub type Result<T> = std::result::Result<T, CryptoError>;
