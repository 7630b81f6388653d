//! Anonymous credentials over a hidden-order group.
//!
//! Issuers hold a CL-style key `(n, S, Z, R_0..R_L)` and sign attribute
//! vectors as `(A, e, v)` with `A^e S^v prod R_i^{m_i} = Z (mod n)`.
//! Index 0 is the holder's link secret, signed blindly; the last index is
//! the credential's revocation handle prime. Holders present credentials
//! in zero knowledge, revealing chosen attributes and proving order
//! predicates, allowed-value membership and non-revocation.

mod issuance;
mod keys;
pub mod predicates;
mod presentation;
pub mod schema;

pub use issuance::{
    complete_credential, encode_claims, issue_credential, issue_encoded, request_issuance,
    verify_issuance_request, Credential, HolderBlinding, IssuanceRequest, LinkSecret,
    PartialCredential, Signature,
};
pub use keys::{
    issuer_keygen, CredentialDefinition, IssuerKeyPair, IssuerPublicKey, IssuerSecretKey, E_BITS,
};
pub use presentation::{
    build_presentation, verify_presentation, AllowedValues, Predicate, PredicateCommitment,
    Presentation, PresentationRequest, RejectReason, Verdict, NONCE_LEN, PREDICATE_WIDTH,
};
pub use schema::{encode_attribute, CredentialSchema, Encoding};
pub use vaxpass_core::range::Direction;

use thiserror::Error;
use vaxpass_core::CryptoError;
use vaxpass_revocation::RevocationError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnonCredsError {
    #[error("bad attribute format: {0}")]
    BadFormat(String),
    #[error("unknown attribute {0}")]
    UnknownAttribute(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid presentation request: {0}")]
    InvalidRequest(String),
    #[error("blinded link-secret commitment failed verification")]
    BadBlinding,
    #[error("credential signature does not verify")]
    InvalidSignature,
    #[error("credential cannot satisfy the request: {0}")]
    CannotSatisfy(String),
    #[error("revocation witness is not current")]
    StaleWitness,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Revocation(#[from] RevocationError),
}

impl AnonCredsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnonCredsError::BadFormat(_) => "BAD_FORMAT",
            AnonCredsError::UnknownAttribute(_) => "UNKNOWN_ATTRIBUTE",
            AnonCredsError::InvalidSchema(_) => "INVALID_SCHEMA",
            AnonCredsError::InvalidRequest(_) => "INVALID_REQUEST",
            AnonCredsError::BadBlinding => "BAD_BLINDING",
            AnonCredsError::InvalidSignature => "INVALID_SIGNATURE",
            AnonCredsError::CannotSatisfy(_) => "CANNOT_SATISFY",
            AnonCredsError::StaleWitness => "STALE_WITNESS",
            AnonCredsError::Crypto(e) => e.code(),
            AnonCredsError::Revocation(e) => e.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, AnonCredsError>;
