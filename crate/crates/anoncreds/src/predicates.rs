//! Standalone predicate and set-membership proofs on a commitment
//! `C = g^m h^r`. Presentations embed the same constructions in their
//! aggregated proof.

use num_bigint::{BigInt, BigUint};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use vaxpass_core::bigint::{pow_signed, to_signed};
use vaxpass_core::range::{prove_range, verify_range, Direction, RangeClaim, RangeProof};
use vaxpass_core::{or_prove, or_verify, CryptoError, OrProof, Statement, SystemParams, Transcript};

use crate::presentation::PREDICATE_WIDTH;
use crate::{AnonCredsError, Result};

fn claim<'a>(params: &'a SystemParams, c: &'a BigUint, k: &'a BigInt, op: Direction) -> RangeClaim<'a> {
    RangeClaim {
        params,
        commitment: c,
        bound: k,
        direction: op,
        width: PREDICATE_WIDTH,
    }
}

fn prove_order<R: RngCore + ?Sized>(
    params: &SystemParams,
    c: &BigUint,
    m: &BigInt,
    r: &BigUint,
    k: &BigInt,
    op: Direction,
    t: &Transcript,
    rng: &mut R,
) -> Result<RangeProof> {
    let claim = claim(params, c, k, op);
    if claim.delta(m).is_none() {
        return Err(AnonCredsError::CannotSatisfy(format!("{m} vs bound {k}")));
    }
    Ok(prove_range(&claim, m, r, t, rng)?)
}

/// Prove `m >= k` for `C = g^m h^r`, with `m - k < 2^32`.
pub fn prove_geq<R: RngCore + ?Sized>(
    params: &SystemParams,
    c: &BigUint,
    m: &BigInt,
    r: &BigUint,
    k: &BigInt,
    t: &Transcript,
    rng: &mut R,
) -> Result<RangeProof> {
    prove_order(params, c, m, r, k, Direction::AtLeast, t, rng)
}

pub fn verify_geq(params: &SystemParams, c: &BigUint, k: &BigInt, proof: &RangeProof, t: &Transcript) -> bool {
    verify_range(&claim(params, c, k, Direction::AtLeast), proof, t)
}

/// Prove `m <= k`, i.e. `k - m >= 0`.
pub fn prove_leq<R: RngCore + ?Sized>(
    params: &SystemParams,
    c: &BigUint,
    m: &BigInt,
    r: &BigUint,
    k: &BigInt,
    t: &Transcript,
    rng: &mut R,
) -> Result<RangeProof> {
    prove_order(params, c, m, r, k, Direction::AtMost, t, rng)
}

pub fn verify_leq(params: &SystemParams, c: &BigUint, k: &BigInt, proof: &RangeProof, t: &Transcript) -> bool {
    verify_range(&claim(params, c, k, Direction::AtMost), proof, t)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetMembershipProof {
    pub proof: OrProof,
}

/// One clause `C g^{-v} = h^rho` per allowed value, in sorted order.
fn membership_clauses(params: &SystemParams, c: &BigUint, allowed: &[BigInt]) -> Result<(Vec<BigInt>, Vec<Statement>)> {
    let mut sorted = allowed.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(AnonCredsError::InvalidRequest("empty allowed list".into()));
    }
    let n = &params.modulus;
    let clauses = sorted
        .iter()
        .map(|v| {
            let gv = pow_signed(&params.g, &-v, n).ok_or(CryptoError::Malformed("g not invertible".into()))?;
            let mut st = Statement::new();
            let rho = st.secret(params.randomness_bits());
            st.relation("membership", n, c * gv % n, vec![(params.h.clone(), rho)]);
            Ok(st)
        })
        .collect::<Result<_>>()?;
    Ok((sorted, clauses))
}

fn membership_transcript(t: &Transcript, values: &[BigInt]) -> Transcript {
    let mut t = t.clone();
    for v in values {
        t.absorb_int(b"allowed", v);
    }
    t
}

pub fn prove_set_membership<R: RngCore + ?Sized>(
    params: &SystemParams,
    c: &BigUint,
    m: &BigInt,
    r: &BigUint,
    allowed: &[BigInt],
    t: &Transcript,
    rng: &mut R,
) -> Result<SetMembershipProof> {
    let (sorted, clauses) = membership_clauses(params, c, allowed)?;
    let live = sorted
        .iter()
        .position(|v| v == m)
        .ok_or_else(|| AnonCredsError::CannotSatisfy("value not in the allowed list".into()))?;
    let proof = or_prove(&clauses, live, &[to_signed(r)], &membership_transcript(t, &sorted), rng)?;
    Ok(SetMembershipProof { proof })
}

pub fn verify_set_membership(
    params: &SystemParams,
    c: &BigUint,
    allowed: &[BigInt],
    proof: &SetMembershipProof,
    t: &Transcript,
) -> bool {
    match membership_clauses(params, c, allowed) {
        Ok((sorted, clauses)) => or_verify(&clauses, &proof.proof, &membership_transcript(t, &sorted)),
        Err(_) => false,
    }
}
