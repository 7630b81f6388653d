//! Bit-decomposition range proofs on committed integers.
//!
//! For a commitment `C = g^m h^r` and public bound `k`, the prover shows
//! `delta = m - k` (or `k - m`) lies in `[0, 2^width)`: it commits to each
//! bit `b_i` of `delta` as `C_i = g^{b_i} h^{rho_i}`, proves every `C_i`
//! opens to 0 or 1 with a two-clause disjunction, and proves that
//! `(C g^{-k})^{+-1} * prod C_i^{-2^i}` is a pure power of `h`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bigint::{pow2, pow_signed, random_bits, to_signed};
use crate::params::SystemParams;
use crate::sigma::{CompoundProof, OrWitness, ProofBuilder, Statement};
use crate::transcript::Transcript;
use crate::{CryptoError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `m >= bound`
    #[serde(rename = "ge")]
    AtLeast,
    /// `m <= bound`
    #[serde(rename = "le")]
    AtMost,
}

/// Public description of one range claim.
#[derive(Clone, Debug)]
pub struct RangeClaim<'a> {
    pub params: &'a SystemParams,
    pub commitment: &'a BigUint,
    pub bound: &'a BigInt,
    pub direction: Direction,
    pub width: u32,
}

/// Prover-side data: the commitment opening and per-bit randomness.
#[derive(Clone, Debug)]
pub struct RangeWitness {
    pub value: BigInt,
    pub randomness: BigUint,
    pub bit_randomness: Vec<BigUint>,
}

impl RangeClaim<'_> {
    /// `delta` for a committed value, or `None` if the claim is false.
    pub fn delta(&self, value: &BigInt) -> Option<BigUint> {
        let delta = match self.direction {
            Direction::AtLeast => value - self.bound,
            Direction::AtMost => self.bound - value,
        };
        let delta = delta.to_biguint()?;
        (delta.bits() <= u64::from(self.width)).then_some(delta)
    }

    /// Commit to the bits of `delta`. Returns the bit commitments and the witness.
    pub fn commit_bits<R: RngCore + ?Sized>(
        &self,
        value: &BigInt,
        randomness: &BigUint,
        rng: &mut R,
    ) -> Result<(Vec<BigUint>, RangeWitness)> {
        let delta = self
            .delta(value)
            .ok_or(CryptoError::OutOfRange("value outside the claimed range"))?;
        let p = self.params;
        let n = &p.modulus;
        let mut commitments = Vec::with_capacity(self.width as usize);
        let mut bit_randomness = Vec::with_capacity(self.width as usize);
        for i in 0..self.width {
            let rho = random_bits(rng, u64::from(p.randomness_bits()));
            let mut c = p.h.modpow(&rho, n);
            if delta.bit(u64::from(i)) {
                c = c * &p.g % n;
            }
            commitments.push(c);
            bit_randomness.push(rho);
        }
        Ok((
            commitments,
            RangeWitness {
                value: value.clone(),
                randomness: randomness.clone(),
                bit_randomness,
            },
        ))
    }

    /// Add the bit disjunctions and the linking relation to `builder`.
    pub fn add_to(
        &self,
        builder: &mut ProofBuilder,
        label: &str,
        bit_commitments: &[BigUint],
        witness: Option<&RangeWitness>,
    ) -> Result<()> {
        let p = self.params;
        let n = &p.modulus;
        if bit_commitments.len() != self.width as usize
            || bit_commitments.iter().any(|c| c >= n)
            || self.commitment >= n
        {
            return Err(CryptoError::Malformed(format!("{label}: bit commitments")));
        }
        let g_inv = p
            .g
            .modinv(n)
            .ok_or_else(|| CryptoError::Malformed("g not invertible".into()))?;
        let rand_bits = p.randomness_bits();
        let delta = witness.and_then(|w| self.delta(&w.value));
        if witness.is_some() && delta.is_none() {
            return Err(CryptoError::WitnessMismatch);
        }

        for (i, c) in bit_commitments.iter().enumerate() {
            let mut zero = Statement::new();
            let rho = zero.secret(rand_bits);
            zero.relation(format!("{label}/bit"), n, c.clone(), vec![(p.h.clone(), rho)]);
            let mut one = Statement::new();
            let rho = one.secret(rand_bits);
            one.relation(format!("{label}/bit"), n, c * &g_inv % n, vec![(p.h.clone(), rho)]);
            let or_witness = match (witness, &delta) {
                (Some(w), Some(d)) => Some(OrWitness {
                    live: usize::from(d.bit(i as u64)),
                    witness: vec![to_signed(&w.bit_randomness[i])],
                }),
                _ => None,
            };
            builder.disjunction(label, vec![zero, one], or_witness);
        }

        // D = (C g^{-k})^{+-1} * prod C_i^{-2^i}
        let shifted = self.commitment * pow_signed(&p.g, &-self.bound, n)
            .ok_or_else(|| CryptoError::Malformed("g not invertible".into()))?
            % n;
        let mut d = match self.direction {
            Direction::AtLeast => shifted,
            Direction::AtMost => shifted
                .modinv(n)
                .ok_or_else(|| CryptoError::Malformed(format!("{label}: commitment not invertible")))?,
        };
        let mut weighted = BigUint::one();
        for (i, c) in bit_commitments.iter().enumerate() {
            weighted = weighted * c.modpow(&pow2(i as u32), n) % n;
        }
        let weighted_inv = weighted
            .modinv(n)
            .ok_or_else(|| CryptoError::Malformed(format!("{label}: bit commitment not invertible")))?;
        d = d * weighted_inv % n;

        let link_value = witness.map(|w| {
            let r = to_signed(&w.randomness);
            let signed_r = match self.direction {
                Direction::AtLeast => r,
                Direction::AtMost => -r,
            };
            let weighted_rho = w
                .bit_randomness
                .iter()
                .enumerate()
                .fold(BigInt::zero(), |acc, (i, rho)| acc + (to_signed(rho) << i));
            signed_r - weighted_rho
        });
        let link = builder.secret(rand_bits + self.width + 2, link_value);
        builder.relation(format!("{label}/link"), n, d, vec![(p.h.clone(), link)]);
        Ok(())
    }

    pub fn absorb(&self, t: &mut Transcript, bit_commitments: &[BigUint]) {
        t.absorb_element(b"commitment", self.commitment, &self.params.modulus);
        t.absorb_int(b"bound", self.bound);
        t.absorb(
            b"direction",
            match self.direction {
                Direction::AtLeast => b"ge",
                Direction::AtMost => b"le",
            },
        );
        t.absorb(b"width", &self.width.to_be_bytes());
        for c in bit_commitments {
            t.absorb_element(b"bit", c, &self.params.modulus);
        }
    }
}

/// Standalone range proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeProof {
    #[serde(with = "crate::serde_int::biguint_vec")]
    pub bit_commitments: Vec<BigUint>,
    pub proof: CompoundProof,
}

pub fn prove_range<R: RngCore + ?Sized>(
    claim: &RangeClaim<'_>,
    value: &BigInt,
    randomness: &BigUint,
    transcript: &Transcript,
    rng: &mut R,
) -> Result<RangeProof> {
    let (bits, witness) = claim.commit_bits(value, randomness, rng)?;
    let mut builder = ProofBuilder::new();
    claim.add_to(&mut builder, "range", &bits, Some(&witness))?;
    let mut t = transcript.clone();
    claim.absorb(&mut t, &bits);
    let proof = builder.prove(&t, rng)?;
    Ok(RangeProof {
        bit_commitments: bits,
        proof,
    })
}

pub fn verify_range(claim: &RangeClaim<'_>, proof: &RangeProof, transcript: &Transcript) -> bool {
    let mut builder = ProofBuilder::new();
    if claim
        .add_to(&mut builder, "range", &proof.bit_commitments, None)
        .is_err()
    {
        return false;
    }
    let mut t = transcript.clone();
    claim.absorb(&mut t, &proof.bit_commitments);
    builder.verify(&proof.proof, &t).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::commit;
    use crate::params::{setup_params, SecurityProfile};
    use rand::rngs::OsRng;

    fn check(m: u32, k: u32, direction: Direction) -> Result<bool> {
        let p = setup_params(SecurityProfile::ToyFixed, None)?;
        let r = BigUint::from(12345u32);
        let c = commit(&p, &BigUint::from(m), &r)?.value;
        let k = BigInt::from(k);
        let claim = RangeClaim {
            params: &p,
            commitment: &c,
            bound: &k,
            direction,
            width: 32,
        };
        let t = Transcript::new(b"range-test");
        let proof = prove_range(&claim, &BigInt::from(m), &r, &t, &mut OsRng)?;
        Ok(verify_range(&claim, &proof, &t))
    }

    #[test]
    fn geq_and_leq() {
        assert!(check(2, 1, Direction::AtLeast).unwrap());
        assert!(check(5, 5, Direction::AtLeast).unwrap());
        assert!(check(7, 20, Direction::AtMost).unwrap());
        assert!(check(9, 9, Direction::AtMost).unwrap());
        assert!(check(2, 3, Direction::AtLeast).is_err());
        assert!(check(8, 7, Direction::AtMost).is_err());
    }

    #[test]
    fn delta_wider_than_width_refused() {
        let p = setup_params(SecurityProfile::ToyFixed, None).unwrap();
        let c = BigUint::from(1u32);
        let k = BigInt::zero();
        let claim = RangeClaim {
            params: &p,
            commitment: &c,
            bound: &k,
            direction: Direction::AtLeast,
            width: 4,
        };
        assert!(claim.delta(&BigInt::from(15)).is_some());
        assert!(claim.delta(&BigInt::from(16)).is_none());
        assert!(claim.delta(&BigInt::from(-1)).is_none());
    }
}
