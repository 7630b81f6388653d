use std::collections::BTreeSet;
use std::fmt;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use vaxpass_core::canonical;

use crate::did::{Did, DidDocument};
use crate::{AgentError, Result};

const TAG_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Inviter,
    Invitee,
}

/// One end of a pairwise channel. Each direction has its own key, so an
/// envelope reflected back to its sender fails authentication.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub id: String,
    pub local: Did,
    pub remote: DidDocument,
    pub role: Role,
    #[serde(with = "hex::serde")]
    send_key: [u8; 32],
    #[serde(with = "hex::serde")]
    recv_key: [u8; 32],
    next_id: u64,
    seen: BTreeSet<u64>,
}

impl fmt::Debug for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Connection")
            .field("id", &self.id)
            .field("local", &self.local)
            .field("remote", &self.remote.id)
            .field("role", &self.role)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub connection_id: String,
    pub message_id: u64,
    #[serde(with = "hex::serde")]
    pub nonce: [u8; 24],
    pub ciphertext: String,
    pub tag: String,
}

#[derive(Serialize)]
struct Header<'a> {
    connection_id: &'a str,
    message_id: u64,
}

impl Connection {
    pub(crate) fn new(id: String, local: Did, remote: DidDocument, role: Role, send_key: [u8; 32], recv_key: [u8; 32]) -> Self {
        Connection {
            id,
            local,
            remote,
            role,
            send_key,
            recv_key,
            next_id: 1,
            seen: BTreeSet::new(),
        }
    }

    /// Test hook: whether two ends were derived from the same handshake.
    pub fn pairs_with(&self, other: &Connection) -> bool {
        self.id == other.id && self.send_key == other.recv_key && self.recv_key == other.send_key
    }

    pub fn pack<R: RngCore + CryptoRng>(&mut self, plaintext: &[u8], rng: &mut R) -> Envelope {
        let message_id = self.next_id;
        self.next_id += 1;
        let mut nonce = [0u8; 24];
        rng.fill_bytes(&mut nonce);
        let aad = canonical::to_vec(&Header {
            connection_id: &self.id,
            message_id,
        });
        let mut sealed = XChaCha20Poly1305::new(&self.send_key.into())
            .encrypt(XNonce::from_slice(&nonce), Payload { msg: plaintext, aad: &aad })
            .expect("encryption does not fail");
        let tag = sealed.split_off(sealed.len() - TAG_LEN);
        Envelope {
            connection_id: self.id.clone(),
            message_id,
            nonce,
            ciphertext: URL_SAFE_NO_PAD.encode(&sealed),
            tag: URL_SAFE_NO_PAD.encode(&tag),
        }
    }

    /// Decrypt and record the message id. Fails with `AUTH_FAIL` for any
    /// tampering or foreign envelope, `REPLAY` for a redelivered one.
    pub fn unpack(&mut self, env: &Envelope) -> Result<Vec<u8>> {
        if env.connection_id != self.id {
            return Err(AgentError::AuthFail);
        }
        let mut sealed = URL_SAFE_NO_PAD.decode(&env.ciphertext).map_err(|_| AgentError::AuthFail)?;
        let tag = URL_SAFE_NO_PAD.decode(&env.tag).map_err(|_| AgentError::AuthFail)?;
        if tag.len() != TAG_LEN {
            return Err(AgentError::AuthFail);
        }
        sealed.extend_from_slice(&tag);
        let aad = canonical::to_vec(&Header {
            connection_id: &env.connection_id,
            message_id: env.message_id,
        });
        let plain = XChaCha20Poly1305::new(&self.recv_key.into())
            .decrypt(XNonce::from_slice(&env.nonce), Payload { msg: &sealed, aad: &aad })
            .map_err(|_| AgentError::AuthFail)?;
        if !self.seen.insert(env.message_id) {
            return Err(AgentError::Replay);
        }
        Ok(plain)
    }

    pub fn pack_json<T: Serialize, R: RngCore + CryptoRng>(&mut self, message: &T, rng: &mut R) -> Envelope {
        self.pack(&canonical::to_vec(message), rng)
    }

    pub fn unpack_json<T: serde::de::DeserializeOwned>(&mut self, env: &Envelope) -> Result<T> {
        let plain = self.unpack(env)?;
        serde_json::from_slice(&plain).map_err(|_| AgentError::BadPayload)
    }
}
