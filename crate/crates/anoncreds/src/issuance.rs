//! Blind issuance: the holder commits to its link secret, the issuer signs
//! the remaining attributes on top of that commitment.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use vaxpass_core::bigint::{random_bits, to_signed};
use vaxpass_core::prime::random_prime;
use vaxpass_core::{sigma_prove, sigma_verify, SigmaProof, Statement, Transcript, MESSAGE_BITS, SLACK_BITS};
use vaxpass_revocation::{AccumulatorState, MembershipWitness, RegistryDelta};

use crate::keys::{sign_blinded, CredentialDefinition, IssuerKeyPair, E_BITS};
use crate::schema::CredentialSchema;
use crate::{AnonCredsError, Result};

/// Long-lived holder secret signed into every credential at index 0.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSecret(#[serde(with = "vaxpass_core::serde_int::biguint")] pub BigUint);

impl std::fmt::Debug for LinkSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LinkSecret(..)")
    }
}

impl LinkSecret {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        LinkSecret(random_bits(rng, u64::from(MESSAGE_BITS)))
    }
}

/// Holder-side blinding factor `v'`, kept until the credential arrives.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolderBlinding {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub v_prime: BigUint,
}

impl std::fmt::Debug for HolderBlinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("HolderBlinding(..)")
    }
}

/// `U = S^{v'} R_0^{link}` with a proof of knowledge of both exponents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuanceRequest {
    pub cred_def_id: String,
    #[serde(with = "vaxpass_core::serde_int::hex_bytes")]
    pub nonce: Vec<u8>,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub u: BigUint,
    pub proof: SigmaProof,
}

fn blinding_bits(def: &CredentialDefinition) -> u32 {
    def.public_key.modulus.bits() as u32 + SLACK_BITS
}

fn blinding_statement(def: &CredentialDefinition, u: &BigUint) -> Statement {
    let pk = &def.public_key;
    let mut st = Statement::new();
    let v = st.secret(blinding_bits(def));
    let link = st.secret(MESSAGE_BITS);
    st.relation(
        "blinding",
        &pk.modulus,
        u.clone(),
        vec![(pk.s.clone(), v), (pk.r[0].clone(), link)],
    );
    st
}

fn blinding_transcript(def: &CredentialDefinition, nonce: &[u8]) -> Transcript {
    let mut t = Transcript::new(b"vaxpass/issuance");
    t.absorb(b"cred-def", def.cred_def_id.as_bytes());
    t.absorb(b"nonce", nonce);
    t
}

pub fn request_issuance<R: RngCore + ?Sized>(
    link_secret: &LinkSecret,
    def: &CredentialDefinition,
    nonce: &[u8],
    rng: &mut R,
) -> Result<(HolderBlinding, IssuanceRequest)> {
    let pk = &def.public_key;
    let n = &pk.modulus;
    // U = 1 is refused by the issuer; only reachable in the toy group
    let (v_prime, u) = loop {
        let v_prime = random_bits(rng, u64::from(blinding_bits(def)));
        let u = pk.s.modpow(&v_prime, n) * pk.r[0].modpow(&link_secret.0, n) % n;
        if !u.is_one() {
            break (v_prime, u);
        }
    };
    let st = blinding_statement(def, &u);
    let proof = sigma_prove(
        &st,
        &[to_signed(&v_prime), to_signed(&link_secret.0)],
        &blinding_transcript(def, nonce),
        rng,
    )?;
    Ok((
        HolderBlinding { v_prime },
        IssuanceRequest {
            cred_def_id: def.cred_def_id.clone(),
            nonce: nonce.to_vec(),
            u,
            proof,
        },
    ))
}

/// Issuer check of the blinded commitment. `nonce` is the one the issuer
/// put in its offer.
pub fn verify_issuance_request(def: &CredentialDefinition, req: &IssuanceRequest, nonce: &[u8]) -> Result<()> {
    let n = &def.public_key.modulus;
    if req.cred_def_id != def.cred_def_id
        || req.nonce != nonce
        || req.u >= *n
        || req.u <= BigUint::from(1u32)
        || !sigma_verify(&blinding_statement(def, &req.u), &req.proof, &blinding_transcript(def, nonce))
    {
        return Err(AnonCredsError::BadBlinding);
    }
    Ok(())
}

/// `(A, e, v)` with `A^e S^v prod R_i^{m_i} = Z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub a: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub e: BigUint,
    #[serde(with = "vaxpass_core::serde_int::bigint")]
    pub v: BigInt,
}

/// What the issuer sends back: everything but the link secret and `v'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialCredential {
    pub cred_def_id: String,
    pub schema_id: String,
    pub serial: String,
    pub raw: BTreeMap<String, String>,
    /// Encoded attributes by schema index; index 0 is a placeholder.
    #[serde(with = "vaxpass_core::serde_int::bigint_vec")]
    pub values: Vec<BigInt>,
    pub signature: Signature,
    pub witness: MembershipWitness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires: Option<String>,
}

/// A stored credential.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub cred_def_id: String,
    pub schema_id: String,
    pub serial: String,
    pub raw: BTreeMap<String, String>,
    #[serde(with = "vaxpass_core::serde_int::bigint_vec")]
    pub values: Vec<BigInt>,
    pub signature: Signature,
    pub witness: MembershipWitness,
    /// Carried through from issuance; nothing checks it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires: Option<String>,
}

impl Credential {
    pub fn verify(&self, def: &CredentialDefinition) -> bool {
        let s = &self.signature;
        def.cred_def_id == self.cred_def_id && def.public_key.verify(&self.values, &s.a, &s.e, &s.v)
    }

    pub fn handle_prime(&self) -> &BigUint {
        &self.witness.prime
    }
}

/// Encode a full raw claim map against `schema`.
pub fn encode_claims(schema: &CredentialSchema, raw: &BTreeMap<String, String>) -> Result<Vec<BigInt>> {
    if let Some(extra) = raw.keys().find(|k| schema.claim(k).is_err()) {
        return Err(AnonCredsError::UnknownAttribute(extra.clone()));
    }
    schema
        .claims()
        .iter()
        .map(|a| {
            let v = raw
                .get(&a.name)
                .ok_or_else(|| AnonCredsError::BadFormat(format!("missing attribute {}", a.name)))?;
            schema.encode(&a.name, v)
        })
        .collect()
}

/// Sign raw claims for the holder behind `req` and register `serial` in
/// the revocation registry.
#[allow(clippy::too_many_arguments)]
pub fn issue_credential<R: RngCore + ?Sized>(
    keys: &IssuerKeyPair,
    schema: &CredentialSchema,
    registry: &mut AccumulatorState,
    raw: &BTreeMap<String, String>,
    req: &IssuanceRequest,
    nonce: &[u8],
    serial: &str,
    rng: &mut R,
) -> Result<(PartialCredential, RegistryDelta)> {
    let claims = encode_claims(schema, raw)?;
    let (mut partial, delta) = issue_encoded(keys, schema, registry, &claims, req, nonce, serial, rng)?;
    partial.raw = raw.clone();
    Ok((partial, delta))
}

/// Like [`issue_credential`] but over already encoded claim values.
#[allow(clippy::too_many_arguments)]
pub fn issue_encoded<R: RngCore + ?Sized>(
    keys: &IssuerKeyPair,
    schema: &CredentialSchema,
    registry: &mut AccumulatorState,
    claims: &[BigInt],
    req: &IssuanceRequest,
    nonce: &[u8],
    serial: &str,
    rng: &mut R,
) -> Result<(PartialCredential, RegistryDelta)> {
    let def = &keys.definition;
    if def.schema_id != schema.schema_id || claims.len() != schema.claims().len() {
        return Err(AnonCredsError::InvalidSchema("claims do not match the schema".into()));
    }
    if claims.iter().any(|m| m.bits() > u64::from(MESSAGE_BITS)) {
        return Err(vaxpass_core::CryptoError::OutOfRange("attribute exceeds 256 bits").into());
    }
    verify_issuance_request(def, req, nonce)?;

    let (witness, delta) = registry.add(serial)?;
    let mut values = Vec::with_capacity(schema.arity());
    values.push(BigInt::from(0));
    values.extend(claims.iter().cloned());
    values.push(to_signed(&witness.prime));

    let e = random_prime(u64::from(E_BITS), rng)?;
    let v2 = random_bits(rng, u64::from(blinding_bits(def)));
    let a = sign_blinded(keys, &req.u, &values, &e, &v2)?;
    Ok((
        PartialCredential {
            cred_def_id: def.cred_def_id.clone(),
            schema_id: schema.schema_id.clone(),
            serial: serial.into(),
            raw: BTreeMap::new(),
            values,
            signature: Signature {
                a,
                e,
                v: to_signed(&v2),
            },
            witness,
            expires: None,
        },
        delta,
    ))
}

/// Add the holder's pieces and check the signature before storing. Raw
/// claims, when present, must encode to the signed values.
pub fn complete_credential(
    partial: PartialCredential,
    blinding: &HolderBlinding,
    link_secret: &LinkSecret,
    schema: &CredentialSchema,
    def: &CredentialDefinition,
) -> Result<Credential> {
    let mut values = partial.values;
    if values.len() != schema.arity() {
        return Err(AnonCredsError::InvalidSignature);
    }
    if !partial.raw.is_empty() {
        let encoded = encode_claims(schema, &partial.raw).map_err(|_| AnonCredsError::InvalidSignature)?;
        if encoded[..] != values[1..values.len() - 1] {
            return Err(AnonCredsError::InvalidSignature);
        }
    }
    values[0] = to_signed(&link_secret.0);
    let signature = Signature {
        v: partial.signature.v + to_signed(&blinding.v_prime),
        ..partial.signature
    };
    let handle_matches = values.last() == Some(&to_signed(&partial.witness.prime));
    let cred = Credential {
        cred_def_id: partial.cred_def_id,
        schema_id: partial.schema_id,
        serial: partial.serial,
        raw: partial.raw,
        values,
        signature,
        witness: partial.witness,
        expires: partial.expires,
    };
    if !handle_matches || cred.schema_id != def.schema_id || !cred.verify(def) {
        return Err(AnonCredsError::InvalidSignature);
    }
    Ok(cred)
}
