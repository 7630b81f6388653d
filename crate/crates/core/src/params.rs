//! Security profiles, hidden-order groups and system parameters.

use num_bigint::BigUint;
use num_traits::One;
use rand::{rngs::OsRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bigint::{byte_len, random_bits};
use crate::prime::random_safe_prime;
use crate::{Result, CHALLENGE_BITS, SLACK_BITS};

/// `toy-fixed` is for known-answer tests only and is insecure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecurityProfile {
    #[serde(rename = "toy-fixed")]
    ToyFixed,
    #[serde(rename = "test")]
    Test,
    #[serde(rename = "prod")]
    Prod,
}

impl SecurityProfile {
    pub fn modulus_bits(self) -> u32 {
        match self {
            SecurityProfile::ToyFixed => 11,
            SecurityProfile::Test => 512,
            SecurityProfile::Prod => 2048,
        }
    }

    /// Bit length of uniformly drawn blinding exponents: modulus plus slack.
    pub fn randomness_bits(self) -> u32 {
        self.modulus_bits() + SLACK_BITS
    }

    pub fn is_insecure(self) -> bool {
        self == SecurityProfile::ToyFixed
    }
}

impl std::str::FromStr for SecurityProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "toy-fixed" => Ok(SecurityProfile::ToyFixed),
            "test" => Ok(SecurityProfile::Test),
            "prod" => Ok(SecurityProfile::Prod),
            other => Err(format!("unknown security profile {other:?}")),
        }
    }
}

// 1081 = 23 * 47 with 23 = 2*11 + 1 and 47 = 2*23 + 1.
const TOY_P: u32 = 47;
const TOY_Q: u32 = 23;
const TOY_G: u32 = 4;
const TOY_H: u32 = 9;

/// An RSA modulus built from two safe primes, with its trapdoor.
///
/// Only issuers keep one of these around (for their own signing key);
/// everyone else receives the bare modulus.
#[derive(Clone)]
pub struct RsaGroup {
    pub modulus: BigUint,
    p: BigUint,
    q: BigUint,
}

impl std::fmt::Debug for RsaGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RsaGroup")
            .field("modulus", &self.modulus)
            .finish_non_exhaustive()
    }
}

impl RsaGroup {
    pub fn generate<R: RngCore + ?Sized>(profile: SecurityProfile, rng: &mut R) -> Result<Self> {
        if profile == SecurityProfile::ToyFixed {
            return Ok(Self::from_primes(BigUint::from(TOY_P), BigUint::from(TOY_Q)));
        }
        let half = u64::from(profile.modulus_bits() / 2);
        let (p, _) = random_safe_prime(half, rng)?;
        let q = loop {
            let (q, _) = random_safe_prime(half, rng)?;
            if q != p {
                break q;
            }
        };
        Ok(Self::from_primes(p, q))
    }

    /// Both arguments must be safe primes.
    pub fn from_primes(p: BigUint, q: BigUint) -> Self {
        RsaGroup { modulus: &p * &q, p, q }
    }

    /// Order of the quadratic-residue subgroup, `p'q'`.
    pub fn qr_order(&self) -> BigUint {
        ((&self.p - 1u32) >> 1) * ((&self.q - 1u32) >> 1)
    }

    pub fn factors(&self) -> (&BigUint, &BigUint) {
        (&self.p, &self.q)
    }
}

/// Public parameters of the system commitment group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub profile: SecurityProfile,
    #[serde(with = "crate::serde_int::biguint")]
    pub modulus: BigUint,
    #[serde(with = "crate::serde_int::biguint")]
    pub g: BigUint,
    #[serde(with = "crate::serde_int::biguint")]
    pub h: BigUint,
    pub modulus_bits: u32,
    pub challenge_bits: u32,
    pub slack_bits: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub insecure: bool,
}

impl SystemParams {
    pub fn element_len(&self) -> usize {
        byte_len(&self.modulus)
    }

    pub fn randomness_bits(&self) -> u32 {
        self.profile.randomness_bits()
    }
}

/// Hash a label to a square modulo `modulus`.
pub fn hash_to_qr(label: &[u8], modulus: &BigUint) -> BigUint {
    let len = byte_len(modulus) + 16;
    let mut bytes = Vec::with_capacity(len + 32);
    let mut block = 0u32;
    while bytes.len() < len {
        let mut h = Sha256::new();
        h.update(b"vaxpass/hash-to-qr");
        h.update(block.to_be_bytes());
        h.update(label);
        bytes.extend_from_slice(&h.finalize());
        block += 1;
    }
    bytes.truncate(len);
    let x = BigUint::from_bytes_be(&bytes) % modulus;
    let sq = (&x * &x) % modulus;
    if sq <= BigUint::one() {
        // practically unreachable; fall back to a fixed square
        BigUint::from(4u32)
    } else {
        sq
    }
}

/// Build a seeded or OS-random ChaCha generator.
pub fn seeded_rng(seed: Option<&[u8]>) -> ChaCha20Rng {
    match seed {
        Some(seed) => {
            let mut s = [0u8; 32];
            s.copy_from_slice(&Sha256::digest(seed));
            ChaCha20Rng::from_seed(s)
        }
        None => ChaCha20Rng::from_rng(OsRng).expect("os randomness"),
    }
}

/// Generators `(g, h)` for `modulus`: `g` hashed from `label`, `h = g^a`
/// for a random `a` that is dropped on return.
pub fn derive_generators<R: RngCore + ?Sized>(
    label: &[u8],
    modulus: &BigUint,
    rng: &mut R,
) -> (BigUint, BigUint) {
    let g = hash_to_qr(label, modulus);
    let a = random_bits(rng, u64::from(modulus.bits() as u32 + SLACK_BITS));
    let h = g.modpow(&a, modulus);
    (g, h)
}

/// Set up the system commitment group for `profile`.
///
/// `toy-fixed` ignores the seed and always yields `n = 1081, g = 4, h = 9`.
pub fn setup_params(profile: SecurityProfile, seed: Option<&[u8]>) -> Result<SystemParams> {
    let (modulus, g, h) = if profile == SecurityProfile::ToyFixed {
        (
            BigUint::from(TOY_P * TOY_Q),
            BigUint::from(TOY_G),
            BigUint::from(TOY_H),
        )
    } else {
        let mut rng = seeded_rng(seed);
        let group = RsaGroup::generate(profile, &mut rng)?;
        let (g, h) = derive_generators(b"vaxpass/system/g", &group.modulus, &mut rng);
        (group.modulus, g, h)
    };
    Ok(SystemParams {
        profile,
        modulus_bits: profile.modulus_bits(),
        modulus,
        g,
        h,
        challenge_bits: CHALLENGE_BITS,
        slack_bits: SLACK_BITS,
        insecure: profile.is_insecure(),
    })
}
