use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bigint::random_bits;
use crate::params::SystemParams;
use crate::{CryptoError, Result, MESSAGE_BITS};

/// Integer commitment `g^m * h^r mod n` in the system group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    #[serde(with = "crate::serde_int::biguint")]
    pub value: BigUint,
    #[serde(skip)]
    pub opening: Option<Opening>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub message: BigUint,
    pub randomness: BigUint,
}

/// Commit to `m` with randomness `r`.
///
/// `m` must be below `2^256`; `r` must fit the profile's randomness width.
pub fn commit(params: &SystemParams, m: &BigUint, r: &BigUint) -> Result<Commitment> {
    if m.bits() > u64::from(MESSAGE_BITS) {
        return Err(CryptoError::OutOfRange("message exceeds 2^256"));
    }
    if r.bits() > u64::from(params.randomness_bits()) {
        return Err(CryptoError::OutOfRange("commitment randomness"));
    }
    let n = &params.modulus;
    let value = params.g.modpow(m, n) * params.h.modpow(r, n) % n;
    Ok(Commitment {
        value,
        opening: Some(Opening {
            message: m.clone(),
            randomness: r.clone(),
        }),
    })
}

/// Commit with fresh randomness drawn from the full hiding range.
pub fn commit_random<R: RngCore + ?Sized>(
    params: &SystemParams,
    m: &BigUint,
    rng: &mut R,
) -> Result<Commitment> {
    let r = random_bits(rng, u64::from(params.randomness_bits()));
    commit(params, m, &r)
}

impl Commitment {
    pub fn opens_to(&self, params: &SystemParams, m: &BigUint, r: &BigUint) -> bool {
        commit(params, m, r).is_ok_and(|c| c.value == self.value)
    }
}
