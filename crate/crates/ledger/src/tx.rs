use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vaxpass_agent::{Did, Identity};
use vaxpass_core::canonical;
use vaxpass_revocation::{RegistryDelta, RegistryParams};

use crate::{LedgerError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxKind {
    DidDoc,
    Schema,
    CredDef,
    RevRegDef,
    RevRegEntry,
    TrustList,
}

impl TxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TxKind::DidDoc => "DID_DOC",
            TxKind::Schema => "SCHEMA",
            TxKind::CredDef => "CRED_DEF",
            TxKind::RevRegDef => "REV_REG_DEF",
            TxKind::RevRegEntry => "REV_REG_ENTRY",
            TxKind::TrustList => "TRUST_LIST",
        }
    }

    pub fn parse(s: &str) -> Option<TxKind> {
        [
            TxKind::DidDoc,
            TxKind::Schema,
            TxKind::CredDef,
            TxKind::RevRegDef,
            TxKind::RevRegEntry,
            TxKind::TrustList,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

/// Revocation registry definition; `value` is the accumulator at epoch 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevRegDef {
    pub rev_reg_id: String,
    pub cred_def_id: String,
    pub issuer_did: Did,
    pub params: RegistryParams,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub value: BigUint,
}

impl RevRegDef {
    pub fn id_for(cred_def_id: &str, tag: &str) -> String {
        format!("{cred_def_id}:rev-reg:{tag}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevRegEntry {
    pub rev_reg_id: String,
    pub delta: RegistryDelta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustEntry {
    pub did: Did,
    pub trusted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub kind: TxKind,
    pub payload: serde_json::Value,
    pub author: Did,
    pub sequence: u64,
    #[serde(with = "hex::serde")]
    pub signature: Vec<u8>,
}

#[derive(Serialize)]
struct Unsigned<'a> {
    kind: TxKind,
    payload: &'a serde_json::Value,
    author: &'a Did,
    sequence: u64,
}

impl Transaction {
    /// Sign `payload` as `identity`. `sequence` must exceed every sequence
    /// the author has used before.
    pub fn sign<T: Serialize>(kind: TxKind, payload: &T, identity: &Identity, sequence: u64) -> Transaction {
        let payload = serde_json::to_value(payload).expect("payload serializes");
        let mut tx = Transaction {
            kind,
            payload,
            author: identity.did(),
            sequence,
            signature: Vec::new(),
        };
        tx.signature = identity.sign(&tx.signed_bytes());
        tx
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        canonical::to_vec(&Unsigned {
            kind: self.kind,
            payload: &self.payload,
            author: &self.author,
            sequence: self.sequence,
        })
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(canonical::to_vec(self)).into()
    }

    pub fn decode<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| LedgerError::InvalidPayload(format!("{}: {e}", self.kind.as_str())))
    }
}
