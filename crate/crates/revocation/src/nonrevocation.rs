//! Zero-knowledge proof that a hidden handle prime is accumulated.
//!
//! The witness is blinded as `C_w = w * h^{r_w}` and `C_r = g^{r_w} h^s`
//! (accumulator group, `g` = base, `h` = blinding generator). With
//! `t = -e*r_w` and `u = -e*s` the prover shows
//!
//! ```text
//! A = C_w^e * h^t
//! C_r = g^{r_w} * h^s
//! 1 = C_r^e * g^t * h^u
//! C_e = g_sys^e * h_sys^{r_e}
//! ```
//!
//! and that `e - 2^127` fits in 127 bits via a bit-decomposition range
//! proof on `C_e`. The third relation forces `t = -e*r_w`, so the first
//! one yields `(C_w h^{-r_w})^e = A`.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use vaxpass_core::bigint::{pow2, random_bits, to_signed};
use vaxpass_core::range::{Direction, RangeClaim, RangeWitness};
use vaxpass_core::{CompoundProof, CryptoError, ProofBuilder, SecretId, SystemParams, Transcript};

use crate::accumulator::{MembershipWitness, PublicAccumulator, HANDLE_BITS};
use crate::{RevocationError, Result};

/// Public commitments sent alongside the proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonRevocationCommitments {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub blinded_witness: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub blinding_commitment: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub handle_commitment: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub handle_bits: Vec<BigUint>,
}

/// Prover-side openings for [`NonRevocationCommitments`].
#[derive(Clone, Debug)]
pub struct NonRevocationSecrets {
    prime: BigUint,
    r_w: BigUint,
    s: BigUint,
    range: RangeWitness,
}

fn lower_bound() -> BigInt {
    to_signed(&pow2(HANDLE_BITS as u32 - 1))
}

fn range_claim<'a>(
    params: &'a SystemParams,
    commitment: &'a BigUint,
    bound: &'a BigInt,
) -> RangeClaim<'a> {
    RangeClaim {
        params,
        commitment,
        bound,
        direction: Direction::AtLeast,
        width: HANDLE_BITS as u32 - 1,
    }
}

/// Blind the witness and commit to the handle prime.
///
/// Fails with `STALE_WITNESS` unless `w^e = A` at the accumulator's epoch.
pub fn commit<R: RngCore + ?Sized>(
    params: &SystemParams,
    acc: &PublicAccumulator,
    witness: &MembershipWitness,
    rng: &mut R,
) -> Result<(NonRevocationCommitments, NonRevocationSecrets)> {
    if !witness.verifies(acc) {
        return Err(RevocationError::StaleWitness);
    }
    let bits = u64::from(acc.params.randomness_bits());
    let r_w = random_bits(rng, bits);
    let s = random_bits(rng, bits);
    let (blinded_witness, blinding_commitment) = blind_witness(acc, &witness.witness, &r_w, &s);

    let r_e = random_bits(rng, u64::from(params.randomness_bits()));
    let handle_commitment = vaxpass_core::commit(params, &witness.prime, &r_e)?.value;
    let bound = lower_bound();
    let (handle_bits, range) = range_claim(params, &handle_commitment, &bound)
        .commit_bits(&to_signed(&witness.prime), &r_e, rng)?;
    Ok((
        NonRevocationCommitments {
            blinded_witness,
            blinding_commitment,
            handle_commitment,
            handle_bits,
        },
        NonRevocationSecrets {
            prime: witness.prime.clone(),
            r_w,
            s,
            range,
        },
    ))
}

/// `C_w = w h^{r_w}` and `C_r = g^{r_w} h^s` in the accumulator group.
pub fn blind_witness(
    acc: &PublicAccumulator,
    witness: &BigUint,
    r_w: &BigUint,
    s: &BigUint,
) -> (BigUint, BigUint) {
    let reg = &acc.params;
    let n = &reg.modulus;
    let c_w = witness * reg.blinding.modpow(r_w, n) % n;
    let c_r = reg.base.modpow(r_w, n) * reg.blinding.modpow(s, n) % n;
    (c_w, c_r)
}

/// Opening of the blinded witness: `(e, r_w, s)`.
pub struct BlindingOpening<'a> {
    pub prime: &'a BigUint,
    pub r_w: &'a BigUint,
    pub s: &'a BigUint,
}

/// The three accumulator-group relations showing that `C_w` blinds an
/// `e`-th root of `A`. The handle prime is the caller's secret `prime`.
pub fn add_membership_relations(
    builder: &mut ProofBuilder,
    acc: &PublicAccumulator,
    c_w: &BigUint,
    c_r: &BigUint,
    prime: SecretId,
    prime_bits: u32,
    opening: Option<BlindingOpening<'_>>,
) -> Result<()> {
    let reg = &acc.params;
    let n = &reg.modulus;
    if c_w >= n || c_r >= n {
        return Err(CryptoError::Malformed("non-revocation commitments".into()).into());
    }
    let rand_bits = reg.randomness_bits();
    let product_bits = prime_bits + rand_bits + 1;
    let o = opening.as_ref();
    let r_w = builder.secret(rand_bits, o.map(|o| to_signed(o.r_w)));
    let s = builder.secret(rand_bits, o.map(|o| to_signed(o.s)));
    let t = builder.secret(product_bits, o.map(|o| -(to_signed(o.prime) * to_signed(o.r_w))));
    let u = builder.secret(product_bits, o.map(|o| -(to_signed(o.prime) * to_signed(o.s))));

    builder.relation(
        "nonrevocation/accumulator",
        n,
        acc.value.clone(),
        vec![(c_w.clone(), prime), (reg.blinding.clone(), t)],
    );
    builder.relation(
        "nonrevocation/blinding",
        n,
        c_r.clone(),
        vec![(reg.base.clone(), r_w), (reg.blinding.clone(), s)],
    );
    builder.relation(
        "nonrevocation/product",
        n,
        BigUint::one(),
        vec![
            (c_r.clone(), prime),
            (reg.base.clone(), t),
            (reg.blinding.clone(), u),
        ],
    );
    Ok(())
}

/// Add every non-revocation relation to `builder`.
///
/// `prime` is the caller's secret for the handle prime so that it can be
/// shared with other relations (the credential signature).
pub fn add_relations(
    builder: &mut ProofBuilder,
    params: &SystemParams,
    acc: &PublicAccumulator,
    commitments: &NonRevocationCommitments,
    prime: SecretId,
    prime_bits: u32,
    secrets: Option<&NonRevocationSecrets>,
) -> Result<()> {
    let c = commitments;
    add_membership_relations(
        builder,
        acc,
        &c.blinded_witness,
        &c.blinding_commitment,
        prime,
        prime_bits,
        secrets.map(|s| BlindingOpening {
            prime: &s.prime,
            r_w: &s.r_w,
            s: &s.s,
        }),
    )?;
    let r_e = builder.secret(
        params.randomness_bits(),
        secrets.map(|s| to_signed(&s.range.randomness)),
    );
    builder.relation(
        "nonrevocation/handle",
        &params.modulus,
        c.handle_commitment.clone(),
        vec![(params.g.clone(), prime), (params.h.clone(), r_e)],
    );
    let bound = lower_bound();
    range_claim(params, &c.handle_commitment, &bound).add_to(
        builder,
        "nonrevocation/range",
        &c.handle_bits,
        secrets.map(|s| &s.range),
    )?;
    Ok(())
}

/// Absorb the public inputs of the non-revocation claim.
pub fn absorb(t: &mut Transcript, acc: &PublicAccumulator, c: &NonRevocationCommitments) {
    let n = &acc.params.modulus;
    t.absorb_uint(b"acc/modulus", n);
    t.absorb_element(b"acc/value", &acc.value, n);
    t.absorb(b"acc/epoch", &acc.epoch.to_be_bytes());
    t.absorb_element(b"acc/blinded-witness", &c.blinded_witness, n);
    t.absorb_element(b"acc/blinding-commitment", &c.blinding_commitment, n);
    t.absorb_uint(b"acc/handle-commitment", &c.handle_commitment);
}

/// Standalone non-revocation proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonRevocationProof {
    pub commitments: NonRevocationCommitments,
    pub proof: CompoundProof,
}

pub fn prove_nonrevoked<R: RngCore + ?Sized>(
    params: &SystemParams,
    acc: &PublicAccumulator,
    witness: &MembershipWitness,
    transcript: &Transcript,
    rng: &mut R,
) -> Result<NonRevocationProof> {
    let (commitments, secrets) = commit(params, acc, witness, rng)?;
    let mut builder = ProofBuilder::new();
    let prime = builder.secret(HANDLE_BITS as u32, Some(to_signed(&witness.prime)));
    add_relations(
        &mut builder,
        params,
        acc,
        &commitments,
        prime,
        HANDLE_BITS as u32,
        Some(&secrets),
    )?;
    let mut t = transcript.clone();
    absorb(&mut t, acc, &commitments);
    let proof = builder.prove(&t, rng)?;
    Ok(NonRevocationProof { commitments, proof })
}

pub fn verify_nonrevoked(
    params: &SystemParams,
    acc: &PublicAccumulator,
    proof: &NonRevocationProof,
    transcript: &Transcript,
) -> bool {
    let mut builder = ProofBuilder::new();
    let prime = builder.secret(HANDLE_BITS as u32, None);
    if add_relations(
        &mut builder,
        params,
        acc,
        &proof.commitments,
        prime,
        HANDLE_BITS as u32,
        None,
    )
    .is_err()
    {
        return false;
    }
    let mut t = transcript.clone();
    absorb(&mut t, acc, &proof.commitments);
    builder.verify(&proof.proof, &t).is_ok()
}
