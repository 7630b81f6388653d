//! Issuer key generation and credential definitions.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use vaxpass_core::bigint::{multi_pow, pow_signed, random_below, random_qr};
use vaxpass_core::{setup_params, RsaGroup, SecurityProfile, SystemParams};

use crate::schema::CredentialSchema;
use crate::{AnonCredsError, Result};

/// Bit length of the signature prime `e`; its top bit is always set.
pub const E_BITS: u32 = 337;

/// Public CL key: `n`, `S`, `Z` and one `R_i` per schema attribute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerPublicKey {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub modulus: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub s: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub z: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub r: Vec<BigUint>,
}

impl IssuerPublicKey {
    /// `A^e * S^v * prod R_i^{m_i} == Z`
    pub fn verify(&self, values: &[BigInt], a: &BigUint, e: &BigUint, v: &BigInt) -> bool {
        if values.len() != self.r.len() || a >= &self.modulus || e.bits() != u64::from(E_BITS) {
            return false;
        }
        let e = BigInt::from(e.clone());
        let terms = std::iter::once((a, &e))
            .chain(std::iter::once((&self.s, v)))
            .chain(self.r.iter().zip(values));
        multi_pow(terms, &self.modulus).is_some_and(|lhs| lhs == self.z)
    }
}

/// The issuer's trapdoor: the two safe primes of `n`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerSecretKey {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    p: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    q: BigUint,
}

impl std::fmt::Debug for IssuerSecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("IssuerSecretKey(..)")
    }
}

impl IssuerSecretKey {
    pub(crate) fn group(&self) -> RsaGroup {
        RsaGroup::from_primes(self.p.clone(), self.q.clone())
    }
}

/// Public record published on the ledger for one (issuer, schema) pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialDefinition {
    pub cred_def_id: String,
    pub issuer_did: String,
    pub schema_id: String,
    pub profile: SecurityProfile,
    pub public_key: IssuerPublicKey,
    /// Commitment group for predicate and non-revocation sub-proofs.
    pub commitment_params: SystemParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IssuerKeyPair {
    pub definition: CredentialDefinition,
    pub secret: IssuerSecretKey,
}

impl IssuerKeyPair {
    pub fn public(&self) -> &CredentialDefinition {
        &self.definition
    }
}

/// Fresh CL key over `schema`. `S` generates the quadratic residues and
/// `Z`, `R_i` are random powers of it.
pub fn issuer_keygen<R: RngCore + ?Sized>(
    profile: SecurityProfile,
    schema: &CredentialSchema,
    issuer_did: &str,
    rng: &mut R,
) -> Result<IssuerKeyPair> {
    schema.validate()?;
    let group = RsaGroup::generate(profile, rng)?;
    let n = group.modulus.clone();
    let order = group.qr_order();
    let (p, q) = group.factors();
    let (p1, q1) = ((p - 1u32) >> 1, (q - 1u32) >> 1);
    let s = loop {
        let s = random_qr(rng, &n);
        if !s.modpow(&p1, &n).is_one() && !s.modpow(&q1, &n).is_one() {
            break s;
        }
    };
    let power = |rng: &mut R| {
        let x = random_below(rng, &(&order - 2u32)) + 2u32;
        s.modpow(&x, &n)
    };
    let z = power(rng);
    let r = (0..schema.arity()).map(|_| power(rng)).collect();

    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let commitment_params = setup_params(profile, Some(&seed))?;

    let public_key = IssuerPublicKey { modulus: n, s, z, r };
    Ok(IssuerKeyPair {
        definition: CredentialDefinition {
            cred_def_id: format!("{issuer_did}:cred-def:{}", schema.schema_id),
            issuer_did: issuer_did.into(),
            schema_id: schema.schema_id.clone(),
            profile,
            public_key,
            commitment_params,
        },
        secret: IssuerSecretKey {
            p: p.clone(),
            q: q.clone(),
        },
    })
}

/// `(Z / (U * S^{v''} * prod_{i>=1} R_i^{m_i}))^{1/e}` via the trapdoor.
pub(crate) fn sign_blinded(
    keys: &IssuerKeyPair,
    u: &BigUint,
    values: &[BigInt],
    e: &BigUint,
    v2: &BigUint,
) -> Result<BigUint> {
    let pk = &keys.definition.public_key;
    let n = &pk.modulus;
    let group = keys.secret.group();
    let d = e
        .modinv(&group.qr_order())
        .ok_or(AnonCredsError::Crypto(vaxpass_core::CryptoError::WitnessMismatch))?;
    let mut denom = u * pk.s.modpow(v2, n) % n;
    for (r, m) in pk.r.iter().zip(values).skip(1) {
        let term = pow_signed(r, m, n).ok_or(AnonCredsError::BadBlinding)?;
        denom = denom * term % n;
    }
    let inv = denom.modinv(n).ok_or(AnonCredsError::BadBlinding)?;
    let q = &pk.z * inv % n;
    Ok(q.modpow(&d, n))
}
