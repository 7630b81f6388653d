use std::fmt;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey as AgreementKey, StaticSecret};

use crate::{AgentError, Result};

pub const METHOD: &str = "vax";

/// `did:vax:<base58 of the first 16 bytes of SHA-256(verification key)>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Did(String);

impl Did {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn parse(s: &str) -> Result<Did> {
        let parts: Vec<&str> = s.split(':').collect();
        let id_ok = parts
            .get(2)
            .and_then(|id| bs58::decode(id).into_vec().ok())
            .is_some_and(|b| b.len() == 16);
        if parts.len() != 3 || parts[0] != "did" || parts[1] != METHOD || !id_ok {
            return Err(AgentError::BadDid(s.into()));
        }
        Ok(Did(s.into()))
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Did {
    type Error = AgentError;
    fn try_from(s: String) -> Result<Did> {
        Did::parse(&s)
    }
}

impl From<Did> for String {
    fn from(d: Did) -> String {
        d.0
    }
}

pub fn derive_did(verification_key: &[u8]) -> Result<Did> {
    let bytes: [u8; 32] = verification_key.try_into().map_err(|_| AgentError::BadKey)?;
    VerifyingKey::from_bytes(&bytes).map_err(|_| AgentError::BadKey)?;
    let digest = Sha256::digest(bytes);
    Ok(Did(format!("did:{METHOD}:{}", bs58::encode(&digest[..16]).into_string())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DidDocument {
    pub id: Did,
    #[serde(with = "hex::serde")]
    pub verification_key: [u8; 32],
    #[serde(with = "hex::serde")]
    pub key_agreement: [u8; 32],
    pub service_endpoint: String,
}

impl DidDocument {
    /// Checks that the identifier derives from the verification key.
    pub fn validate(&self) -> Result<()> {
        if derive_did(&self.verification_key)? != self.id {
            return Err(AgentError::BadDid(self.id.to_string()));
        }
        Ok(())
    }

    pub fn verify(&self, message: &[u8], signature: &[u8]) -> Result<()> {
        let key = VerifyingKey::from_bytes(&self.verification_key).map_err(|_| AgentError::BadKey)?;
        let sig = Signature::from_slice(signature).map_err(|_| AgentError::BadSignature)?;
        key.verify(message, &sig).map_err(|_| AgentError::BadSignature)
    }
}

/// Private key material of one DID: an Ed25519 signing key and an X25519
/// key-agreement key.
#[derive(Clone, Serialize, Deserialize)]
pub struct Identity {
    #[serde(with = "hex::serde")]
    signing_seed: [u8; 32],
    #[serde(with = "hex::serde")]
    agreement_secret: [u8; 32],
    pub endpoint: String,
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Identity({})", self.did())
    }
}

impl Identity {
    pub fn generate<R: RngCore + CryptoRng>(endpoint: &str, rng: &mut R) -> Identity {
        let mut signing_seed = [0u8; 32];
        let mut agreement_secret = [0u8; 32];
        rng.fill_bytes(&mut signing_seed);
        rng.fill_bytes(&mut agreement_secret);
        Identity::from_seeds(signing_seed, agreement_secret, endpoint)
    }

    pub fn from_seeds(signing_seed: [u8; 32], agreement_secret: [u8; 32], endpoint: &str) -> Identity {
        Identity {
            signing_seed,
            agreement_secret,
            endpoint: endpoint.into(),
        }
    }

    fn signing_key(&self) -> SigningKey {
        SigningKey::from_bytes(&self.signing_seed)
    }

    pub(crate) fn agreement(&self) -> StaticSecret {
        StaticSecret::from(self.agreement_secret)
    }

    pub fn verification_key(&self) -> [u8; 32] {
        self.signing_key().verifying_key().to_bytes()
    }

    pub fn did(&self) -> Did {
        derive_did(&self.verification_key()).expect("own key is valid")
    }

    pub fn document(&self) -> DidDocument {
        DidDocument {
            id: self.did(),
            verification_key: self.verification_key(),
            key_agreement: AgreementKey::from(&self.agreement()).to_bytes(),
            service_endpoint: self.endpoint.clone(),
        }
    }

    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        self.signing_key().sign(message).to_bytes().to_vec()
    }
}
