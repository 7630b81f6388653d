//! Out-of-band invitations and the connection handshake.
//!
//! The invitee answers an invitation with a [`ConnectionRequest`] carrying
//! an ephemeral X25519 key. Both sides feed `DH(eph, inviter)` and
//! `DH(invitee, inviter)` into HKDF, so the session keys are bound to the
//! ephemeral key and both static keys.

use std::collections::BTreeSet;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vaxpass_core::canonical;
use x25519_dalek::{PublicKey, StaticSecret};

use crate::did::{Did, DidDocument, Identity};
use crate::envelope::{Connection, Role};
use crate::{AgentError, Result};

pub const INVITATION_NONCE_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invitation {
    pub inviter: DidDocument,
    pub endpoint: String,
    #[serde(with = "hex::serde")]
    pub nonce: [u8; INVITATION_NONCE_LEN],
    #[serde(with = "hex::serde")]
    pub signature: Vec<u8>,
}

#[derive(Serialize)]
struct InvitationBody<'a> {
    inviter: &'a DidDocument,
    endpoint: &'a str,
    #[serde(with = "hex::serde")]
    nonce: &'a [u8; INVITATION_NONCE_LEN],
}

impl Invitation {
    fn signed_bytes(&self) -> Vec<u8> {
        canonical::to_vec(&InvitationBody {
            inviter: &self.inviter,
            endpoint: &self.endpoint,
            nonce: &self.nonce,
        })
    }

    pub fn verify(&self) -> Result<()> {
        self.inviter.validate().map_err(|_| AgentError::BadSignature)?;
        self.inviter.verify(&self.signed_bytes(), &self.signature)
    }

    /// Unpadded base64url of the canonical JSON.
    pub fn to_qr(&self) -> String {
        URL_SAFE_NO_PAD.encode(canonical::to_vec(self))
    }

    pub fn from_qr(payload: &str) -> Result<Invitation> {
        let bytes = URL_SAFE_NO_PAD
            .decode(payload.trim())
            .map_err(|_| AgentError::BadPayload)?;
        canonical::from_slice_strict(&bytes).ok_or(AgentError::BadPayload)
    }
}

pub fn create_invitation<R: RngCore + CryptoRng>(identity: &Identity, endpoint: &str, rng: &mut R) -> Invitation {
    let mut nonce = [0u8; INVITATION_NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let mut inv = Invitation {
        inviter: identity.document(),
        endpoint: endpoint.into(),
        nonce,
        signature: Vec::new(),
    };
    inv.signature = identity.sign(&inv.signed_bytes());
    inv
}

/// Invitee's reply to an invitation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionRequest {
    #[serde(with = "hex::serde")]
    pub invitation_nonce: [u8; INVITATION_NONCE_LEN],
    pub invitee: DidDocument,
    #[serde(with = "hex::serde")]
    pub ephemeral: [u8; 32],
    #[serde(with = "hex::serde")]
    pub signature: Vec<u8>,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    #[serde(with = "hex::serde")]
    invitation_nonce: &'a [u8; INVITATION_NONCE_LEN],
    invitee: &'a DidDocument,
    #[serde(with = "hex::serde")]
    ephemeral: &'a [u8; 32],
}

impl ConnectionRequest {
    fn signed_bytes(&self) -> Vec<u8> {
        canonical::to_vec(&RequestBody {
            invitation_nonce: &self.invitation_nonce,
            invitee: &self.invitee,
            ephemeral: &self.ephemeral,
        })
    }
}

/// Invitation nonces this party has already used or answered.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonceLog {
    seen: BTreeSet<String>,
}

impl NonceLog {
    fn take(&mut self, nonce: &[u8]) -> Result<()> {
        if !self.seen.insert(hex::encode(nonce)) {
            return Err(AgentError::NonceReused);
        }
        Ok(())
    }

    pub fn contains(&self, nonce: &[u8]) -> bool {
        self.seen.contains(&hex::encode(nonce))
    }
}

struct SessionKeys {
    id: String,
    inviter_to_invitee: [u8; 32],
    invitee_to_inviter: [u8; 32],
}

fn session_keys(dh1: &[u8; 32], dh2: &[u8; 32], nonce: &[u8], inviter: &Did, invitee: &Did, eph: &[u8; 32]) -> SessionKeys {
    let mut ikm = [0u8; 64];
    ikm[..32].copy_from_slice(dh1);
    ikm[32..].copy_from_slice(dh2);
    let mut info = b"vaxpass/session".to_vec();
    for part in [inviter.as_str().as_bytes(), invitee.as_str().as_bytes(), eph] {
        info.extend_from_slice(&(part.len() as u32).to_be_bytes());
        info.extend_from_slice(part);
    }
    let mut okm = [0u8; 64];
    Hkdf::<Sha256>::new(Some(nonce), &ikm)
        .expand(&info, &mut okm)
        .expect("64 bytes is a valid HKDF length");
    let mut h = Sha256::new();
    h.update(nonce);
    h.update(eph);
    SessionKeys {
        id: hex::encode(&h.finalize()[..16]),
        inviter_to_invitee: okm[..32].try_into().unwrap(),
        invitee_to_inviter: okm[32..].try_into().unwrap(),
    }
}

/// Invitee side. Fails with `BAD_SIGNATURE`, `NONCE_REUSED`, or `DECLINED`
/// when `consent` is false; nothing is recorded on failure.
pub fn accept_invitation<R: RngCore + CryptoRng>(
    invitation: &Invitation,
    identity: &Identity,
    consent: bool,
    used: &mut NonceLog,
    rng: &mut R,
) -> Result<(Connection, ConnectionRequest)> {
    invitation.verify()?;
    if used.contains(&invitation.nonce) {
        return Err(AgentError::NonceReused);
    }
    if !consent {
        return Err(AgentError::Declined);
    }
    let eph = StaticSecret::random_from_rng(&mut *rng);
    let eph_pub = PublicKey::from(&eph).to_bytes();
    let inviter_ka = PublicKey::from(invitation.inviter.key_agreement);
    let dh1 = eph.diffie_hellman(&inviter_ka).to_bytes();
    let dh2 = identity.agreement().diffie_hellman(&inviter_ka).to_bytes();
    let me = identity.did();
    let keys = session_keys(&dh1, &dh2, &invitation.nonce, &invitation.inviter.id, &me, &eph_pub);

    let mut request = ConnectionRequest {
        invitation_nonce: invitation.nonce,
        invitee: identity.document(),
        ephemeral: eph_pub,
        signature: Vec::new(),
    };
    request.signature = identity.sign(&request.signed_bytes());
    used.take(&invitation.nonce)?;
    let conn = Connection::new(
        keys.id,
        me,
        invitation.inviter.clone(),
        Role::Invitee,
        keys.invitee_to_inviter,
        keys.inviter_to_invitee,
    );
    Ok((conn, request))
}

/// Inviter side: invitations issued and not yet answered.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvitationBook {
    outstanding: BTreeSet<String>,
    used: NonceLog,
}

impl InvitationBook {
    pub fn create<R: RngCore + CryptoRng>(&mut self, identity: &Identity, endpoint: &str, rng: &mut R) -> Invitation {
        let inv = create_invitation(identity, endpoint, rng);
        self.outstanding.insert(hex::encode(inv.nonce));
        inv
    }

    /// Complete the handshake for a request answering one of our invitations.
    pub fn respond(&mut self, identity: &Identity, request: &ConnectionRequest) -> Result<Connection> {
        request.invitee.validate().map_err(|_| AgentError::BadSignature)?;
        request.invitee.verify(&request.signed_bytes(), &request.signature)?;
        let nonce = hex::encode(request.invitation_nonce);
        if self.used.contains(&request.invitation_nonce) {
            return Err(AgentError::NonceReused);
        }
        if !self.outstanding.contains(&nonce) {
            return Err(AgentError::UnknownInvitation);
        }
        let eph = PublicKey::from(request.ephemeral);
        let invitee_ka = PublicKey::from(request.invitee.key_agreement);
        let dh1 = identity.agreement().diffie_hellman(&eph).to_bytes();
        let dh2 = identity.agreement().diffie_hellman(&invitee_ka).to_bytes();
        let keys = session_keys(
            &dh1,
            &dh2,
            &request.invitation_nonce,
            &identity.did(),
            &request.invitee.id,
            &request.ephemeral,
        );
        self.outstanding.remove(&nonce);
        self.used.take(&request.invitation_nonce)?;
        Ok(Connection::new(
            keys.id,
            identity.did(),
            request.invitee.clone(),
            Role::Inviter,
            keys.inviter_to_invitee,
            keys.invitee_to_inviter,
        ))
    }
}
