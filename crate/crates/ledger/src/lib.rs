//! Simulated identity ledger.
//!
//! Signed transactions (DID documents, schemas, credential definitions,
//! revocation registries, trust-list entries) are applied by a
//! deterministic state machine and sealed one per block into a SHA-256
//! hash chain. A static leader replicates each block to `N` replicas and
//! commits once `N/2 + 1` of them (itself included) acknowledge it.
//! Nothing personal is ever written: only public keys, schema metadata
//! and accumulator values.

pub mod api;
pub mod block;
pub mod node;
pub mod state;
pub mod store;
pub mod tx;

pub use api::{router, HttpLedger, LedgerApi, LocalLedger, Query, TrustSnapshot};
pub use block::{verify_chain, verify_chain_lines, Block, BlockHeader, ChainVerdict, ZERO_HASH};
pub use node::{Cluster, Genesis, Health, QueryResponse, Receipt, Rejection, Replica};
pub use state::{LedgerState, Location};
pub use store::BlockStore;
pub use tx::{RevRegDef, RevRegEntry, Transaction, TrustEntry, TxKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("duplicate identifier {0}")]
    DuplicateId(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("no quorum: {0}")]
    NoQuorum(String),
    #[error("replica log diverges at height {height}")]
    ForkDetected { height: u64 },
    #[error("invalid block at height {height}")]
    InvalidBlock { height: u64 },
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("sequence {got} does not exceed {last}")]
    StaleSequence { last: u64, got: u64 },
    #[error("epoch must advance from {expected} by one")]
    EpochGap { expected: u64 },
    #[error("inclusion proof failed: {0}")]
    InclusionFailed(String),
    #[error("ledger unavailable: {0}")]
    Unavailable(String),
    #[error("block store: {0}")]
    Store(String),
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::Unauthorized(_) => "REJECTED_UNAUTHORIZED",
            LedgerError::DuplicateId(_) => "DUPLICATE_ID",
            LedgerError::NotFound(_) => "NOT_FOUND",
            LedgerError::NoQuorum(_) => "NO_QUORUM",
            LedgerError::ForkDetected { .. } => "FORK_DETECTED",
            LedgerError::InvalidBlock { .. } => "INVALID_BLOCK",
            LedgerError::InvalidPayload(_) => "INVALID_PAYLOAD",
            LedgerError::StaleSequence { .. } => "STALE_SEQUENCE",
            LedgerError::EpochGap { .. } => "EPOCH_GAP",
            LedgerError::InclusionFailed(_) => "INCLUSION_FAILED",
            LedgerError::Unavailable(_) => "LEDGER_UNAVAILABLE",
            LedgerError::Store(_) => "STORE",
        }
    }

    pub fn to_body(&self) -> ErrorBody {
        let height = match self {
            LedgerError::ForkDetected { height } | LedgerError::InvalidBlock { height } => Some(*height),
            _ => None,
        };
        ErrorBody {
            code: self.code().into(),
            message: self.to_string(),
            height,
        }
    }

    /// Rebuild an error received over HTTP. Numeric details other than
    /// block heights are not carried.
    pub fn from_body(body: ErrorBody) -> LedgerError {
        let m = body.message;
        let h = body.height.unwrap_or(0);
        match body.code.as_str() {
            "REJECTED_UNAUTHORIZED" => LedgerError::Unauthorized(m),
            "DUPLICATE_ID" => LedgerError::DuplicateId(m),
            "NOT_FOUND" => LedgerError::NotFound(m),
            "NO_QUORUM" => LedgerError::NoQuorum(m),
            "FORK_DETECTED" => LedgerError::ForkDetected { height: h },
            "INVALID_BLOCK" => LedgerError::InvalidBlock { height: h },
            "INVALID_PAYLOAD" => LedgerError::InvalidPayload(m),
            "STALE_SEQUENCE" => LedgerError::StaleSequence { last: 0, got: 0 },
            "EPOCH_GAP" => LedgerError::EpochGap { expected: 0 },
            "INCLUSION_FAILED" => LedgerError::InclusionFailed(m),
            "STORE" => LedgerError::Store(m),
            _ => LedgerError::Unavailable(m),
        }
    }
}

/// JSON error body of the node API.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u64>,
}

pub type Result<T> = std::result::Result<T, LedgerError>;
