use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use vaxpass_core::bigint::{pow_signed, to_signed};
use vaxpass_core::params::derive_generators;
use vaxpass_core::{hash_to_prime, RsaGroup, SecurityProfile};

use crate::{RevocationError, Result};

/// Bit length of handle primes.
pub const HANDLE_BITS: u64 = 128;
pub const DEFAULT_CAPACITY: usize = 1 << 16;

pub fn handle_prime(handle: &str) -> BigUint {
    hash_to_prime(handle.as_bytes(), HANDLE_BITS)
}

/// Public group description of one registry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryParams {
    pub profile: SecurityProfile,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub modulus: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub base: BigUint,
    /// Second generator used to blind witnesses in proofs.
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub blinding: BigUint,
}

impl RegistryParams {
    /// Fresh hidden-order group for a registry. The factorization is
    /// dropped before returning. `toy-fixed` uses `N = 1081, base = 4`.
    pub fn generate<R: RngCore + ?Sized>(profile: SecurityProfile, rng: &mut R) -> Result<Self> {
        if profile == SecurityProfile::ToyFixed {
            return Ok(RegistryParams {
                profile,
                modulus: BigUint::from(1081u32),
                base: BigUint::from(4u32),
                blinding: BigUint::from(9u32),
            });
        }
        let group = RsaGroup::generate(profile, rng)?;
        let (base, blinding) = derive_generators(b"vaxpass/accumulator/base", &group.modulus, rng);
        Ok(RegistryParams {
            profile,
            modulus: group.modulus,
            base,
            blinding,
        })
    }

    pub fn randomness_bits(&self) -> u32 {
        self.profile.randomness_bits()
    }
}

/// What verifiers and holders see: the group and the current value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicAccumulator {
    pub params: RegistryParams,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub value: BigUint,
    pub epoch: u64,
}

/// Issuer-side registry state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulatorState {
    pub params: RegistryParams,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub value: BigUint,
    pub epoch: u64,
    #[serde(with = "prime_set")]
    pub members: BTreeSet<BigUint>,
    pub capacity: usize,
}

mod prime_set {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(set: &BTreeSet<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<BigUint> = set.iter().cloned().collect();
        vaxpass_core::serde_int::biguint_vec::serialize(&v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeSet<BigUint>, D::Error> {
        Ok(vaxpass_core::serde_int::biguint_vec::deserialize(d)?
            .into_iter()
            .collect())
    }
}

/// Evidence that prime `e` is accumulated: `w^e = A` at `epoch`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipWitness {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub prime: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub witness: BigUint,
    pub epoch: u64,
}

impl MembershipWitness {
    pub fn verifies(&self, acc: &PublicAccumulator) -> bool {
        self.epoch == acc.epoch
            && self.witness.modpow(&self.prime, &acc.params.modulus) == acc.value
    }
}

/// Changes between `from_epoch` and `to_epoch` and the resulting value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryDelta {
    pub from_epoch: u64,
    pub to_epoch: u64,
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub added: Vec<BigUint>,
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub revoked: Vec<BigUint>,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub value: BigUint,
}

impl AccumulatorState {
    /// Empty registry: `A = base`, epoch 0.
    pub fn init<R: RngCore + ?Sized>(profile: SecurityProfile, rng: &mut R) -> Result<Self> {
        Ok(Self::with_params(RegistryParams::generate(profile, rng)?))
    }

    pub fn with_params(params: RegistryParams) -> Self {
        AccumulatorState {
            value: params.base.clone(),
            params,
            epoch: 0,
            members: BTreeSet::new(),
            capacity: DEFAULT_CAPACITY,
        }
    }

    pub fn public(&self) -> PublicAccumulator {
        PublicAccumulator {
            params: self.params.clone(),
            value: self.value.clone(),
            epoch: self.epoch,
        }
    }

    pub fn add(&mut self, handle: &str) -> Result<(MembershipWitness, RegistryDelta)> {
        self.add_prime(handle_prime(handle))
    }

    /// Accumulate `prime`; the new member's witness is the previous value.
    pub fn add_prime(&mut self, prime: BigUint) -> Result<(MembershipWitness, RegistryDelta)> {
        if self.members.contains(&prime) {
            return Err(RevocationError::DuplicateHandle);
        }
        if self.members.len() >= self.capacity {
            return Err(RevocationError::RegistryFull);
        }
        let witness = self.value.clone();
        self.value = self.value.modpow(&prime, &self.params.modulus);
        self.members.insert(prime.clone());
        let from = self.epoch;
        self.epoch += 1;
        Ok((
            MembershipWitness {
                prime: prime.clone(),
                witness,
                epoch: self.epoch,
            },
            RegistryDelta {
                from_epoch: from,
                to_epoch: self.epoch,
                added: vec![prime],
                revoked: Vec::new(),
                value: self.value.clone(),
            },
        ))
    }

    pub fn revoke(&mut self, handle: &str) -> Result<RegistryDelta> {
        self.revoke_prime(&handle_prime(handle))
    }

    /// Remove `prime` and recompute the value from the remaining members.
    pub fn revoke_prime(&mut self, prime: &BigUint) -> Result<RegistryDelta> {
        if !self.members.remove(prime) {
            return Err(RevocationError::NotMember);
        }
        self.value = self.recompute();
        let from = self.epoch;
        self.epoch += 1;
        Ok(RegistryDelta {
            from_epoch: from,
            to_epoch: self.epoch,
            added: Vec::new(),
            revoked: vec![prime.clone()],
            value: self.value.clone(),
        })
    }

    /// `base^(prod members) mod N` from scratch.
    pub fn recompute(&self) -> BigUint {
        let exponent: BigUint = self.members.iter().product();
        self.params.base.modpow(&exponent, &self.params.modulus)
    }

    /// Witness for a current member, computed from the member set.
    pub fn witness_for(&self, prime: &BigUint) -> Result<MembershipWitness> {
        if !self.members.contains(prime) {
            return Err(RevocationError::NotMember);
        }
        let exponent: BigUint = self.members.iter().filter(|p| *p != prime).product();
        Ok(MembershipWitness {
            prime: prime.clone(),
            witness: self.params.base.modpow(&exponent, &self.params.modulus),
            epoch: self.epoch,
        })
    }
}

/// Bring `witness` forward through `deltas`, which must be contiguous and
/// start at the witness epoch.
///
/// Additions raise the witness to the product of added primes. For a set
/// of revoked primes with product `Q`, `a*e + b*Q = 1` gives the new
/// witness `w^b * A'^a`, since `(w^b A'^a)^e = A'^(bQ + ae) = A'`.
pub fn witness_update(
    witness: &MembershipWitness,
    deltas: &[RegistryDelta],
    params: &RegistryParams,
) -> Result<MembershipWitness> {
    let n = &params.modulus;
    let mut current = witness.clone();
    for delta in deltas {
        if delta.from_epoch != current.epoch || delta.to_epoch <= delta.from_epoch {
            return Err(RevocationError::EpochGap {
                expected: current.epoch,
                found: delta.from_epoch,
            });
        }
        if delta.revoked.contains(&current.prime) {
            return Err(RevocationError::Revoked);
        }
        let added: BigUint = delta.added.iter().product();
        let mut w = current.witness.modpow(&added, n);
        if !delta.revoked.is_empty() {
            let q: BigUint = delta.revoked.iter().product();
            let gcd = to_signed(&current.prime).extended_gcd(&to_signed(&q));
            if !gcd.gcd.is_one() {
                return Err(RevocationError::Revoked);
            }
            let (a, b): (BigInt, BigInt) = (gcd.x, gcd.y);
            let wb = pow_signed(&w, &b, n).ok_or(RevocationError::StaleWitness)?;
            let va = pow_signed(&delta.value, &a, n).ok_or(RevocationError::StaleWitness)?;
            w = wb * va % n;
        }
        current = MembershipWitness {
            prime: current.prime,
            witness: w,
            epoch: delta.to_epoch,
        };
    }
    if let Some(last) = deltas.last() {
        if current.witness.modpow(&current.prime, n) != last.value {
            return Err(RevocationError::StaleWitness);
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::OsRng;

    fn toy() -> AccumulatorState {
        AccumulatorState::init(SecurityProfile::ToyFixed, &mut OsRng).unwrap()
    }

    #[test]
    fn empty_registry() {
        let acc = toy();
        assert_eq!(acc.value, BigUint::from(4u32));
        assert_eq!(acc.epoch, 0);
    }

    #[test]
    fn duplicate_and_missing() {
        let mut acc = toy();
        acc.add_prime(BigUint::from(3u32)).unwrap();
        assert_eq!(
            acc.add_prime(BigUint::from(3u32)).unwrap_err(),
            RevocationError::DuplicateHandle
        );
        assert_eq!(
            acc.revoke_prime(&BigUint::from(7u32)).unwrap_err(),
            RevocationError::NotMember
        );
        assert_eq!(acc.epoch, 1);
    }

    #[test]
    fn capacity_enforced() {
        let mut acc = toy();
        acc.capacity = 1;
        acc.add_prime(BigUint::from(3u32)).unwrap();
        assert_eq!(
            acc.add_prime(BigUint::from(5u32)).unwrap_err().code(),
            "REGISTRY_FULL"
        );
    }

    #[test]
    fn update_rejects_gaps_and_own_revocation() {
        let mut acc = toy();
        let (w3, _) = acc.add_prime(BigUint::from(3u32)).unwrap();
        let (_, d5) = acc.add_prime(BigUint::from(5u32)).unwrap();
        let (_, d7) = acc.add_prime(BigUint::from(7u32)).unwrap();
        let err = witness_update(&w3, std::slice::from_ref(&d7), &acc.params).unwrap_err();
        assert_eq!(err.code(), "EPOCH_GAP");
        let err = witness_update(&w3, &[d7.clone(), d5.clone()], &acc.params).unwrap_err();
        assert_eq!(err.code(), "EPOCH_GAP");
        let w3 = witness_update(&w3, &[d5, d7], &acc.params).unwrap();
        assert!(w3.verifies(&acc.public()));
        let d3 = acc.revoke_prime(&BigUint::from(3u32)).unwrap();
        assert_eq!(
            witness_update(&w3, &[d3], &acc.params).unwrap_err(),
            RevocationError::Revoked
        );
    }
}
