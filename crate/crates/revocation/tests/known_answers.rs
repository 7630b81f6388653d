//! Toy-group (N = 1081, base 4, blinding 9) answers cross-checked against
//! plain u64 modular arithmetic.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::rngs::OsRng;
use vaxpass_core::{ProofBuilder, SecurityProfile, Transcript};
use vaxpass_revocation::nonrevocation::{add_membership_relations, blind_witness, BlindingOpening};
use vaxpass_revocation::{witness_update, AccumulatorState, RevocationError};

const N: u64 = 1081;
// order of the quadratic residues mod 1081
const QR_ORDER: u64 = 253;

fn oracle_modpow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// `x^e` for a signed exponent; `x` must be a quadratic residue.
fn oracle_pow_qr(x: u64, e: &BigInt) -> u64 {
    let reduced = e.mod_floor(&BigInt::from(QR_ORDER)).to_u64().unwrap();
    oracle_modpow(x, reduced, N)
}

fn toy() -> AccumulatorState {
    AccumulatorState::init(SecurityProfile::ToyFixed, &mut OsRng).unwrap()
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

#[test]
fn add_three_then_five() {
    let oracle = oracle_modpow(4, 15, N);
    assert_eq!(oracle, 739);
    let mut acc = toy();
    let (w3, _) = acc.add_prime(big(3)).unwrap();
    let (_, d5) = acc.add_prime(big(5)).unwrap();
    assert_eq!(acc.value, big(739));
    assert_eq!(acc.epoch, 2);

    let w3 = witness_update(&w3, &[d5], &acc.params).unwrap();
    assert_eq!(oracle_modpow(4, 5, N), 1024);
    assert_eq!(oracle_modpow(1024, 3, N), 739);
    assert_eq!(w3.witness, big(1024));
    assert_eq!(acc.witness_for(&big(3)).unwrap().witness, big(1024));
    assert!(w3.verifies(&acc.public()));
}

#[test]
fn revoke_five() {
    assert_eq!(oracle_modpow(4, 3, N), 64);

    let mut acc = toy();
    let (w3, _) = acc.add_prime(big(3)).unwrap();
    let (w5, d5) = acc.add_prime(big(5)).unwrap();
    let w3 = witness_update(&w3, &[d5], &acc.params).unwrap();
    let d = acc.revoke_prime(&big(5)).unwrap();
    assert_eq!(acc.value, big(64));
    assert_eq!(d.revoked, vec![big(5)]);

    let updated = witness_update(&w3, std::slice::from_ref(&d), &acc.params).unwrap();
    assert_eq!(updated.witness, big(4));
    assert_eq!(oracle_modpow(4, 3, N), 64);
    assert!(updated.verifies(&acc.public()));

    assert_eq!(
        witness_update(&w5, &[d], &acc.params).unwrap_err(),
        RevocationError::Revoked
    );
    assert!(!w5.verifies(&acc.public()));
}

#[test]
fn add_seven_update_rule() {
    let mut acc = toy();
    acc.add_prime(big(5)).unwrap();
    let (w3, _) = acc.add_prime(big(3)).unwrap();
    let (_, d7) = acc.add_prime(big(7)).unwrap();
    let w = w3.witness.to_u64().unwrap();
    let updated = witness_update(&w3, &[d7], &acc.params).unwrap();
    assert_eq!(updated.witness, big(oracle_modpow(w, 7, N)));
    assert_eq!(
        oracle_modpow(updated.witness.to_u64().unwrap(), 3, N),
        acc.value.to_u64().unwrap()
    );
    assert_eq!(acc.value, big(oracle_modpow(4, 105, N)));
}

#[test]
fn full_membership_relation() {
    let mut acc = toy();
    acc.add_prime(big(3)).unwrap();
    acc.add_prime(big(5)).unwrap();
    let public = acc.public();
    let w = acc.witness_for(&big(3)).unwrap();
    let (r_w, s) = (big(5), big(7));

    let (c_w, c_r) = blind_witness(&public, &w.witness, &r_w, &s);
    let oracle_cw = 1024 * oracle_modpow(9, 5, N) % N;
    let oracle_cr = oracle_modpow(4, 5, N) * oracle_modpow(9, 7, N) % N;
    assert_eq!((c_w.to_u64().unwrap(), c_r.to_u64().unwrap()), (oracle_cw, oracle_cr));

    // every relation side with t = -e*r_w, u = -e*s
    let t = BigInt::from(-15);
    let u = BigInt::from(-21);
    assert_eq!(oracle_modpow(oracle_cw, 3, N) * oracle_pow_qr(9, &t) % N, 739);
    assert_eq!(oracle_modpow(4, 5, N) * oracle_modpow(9, 7, N) % N, oracle_cr);
    assert_eq!(
        oracle_modpow(oracle_cr, 3, N) * oracle_pow_qr(4, &t) % N * oracle_pow_qr(9, &u) % N,
        1
    );

    let mut builder = ProofBuilder::new();
    let e = builder.secret(128, Some(BigInt::from(3)));
    add_membership_relations(
        &mut builder,
        &public,
        &c_w,
        &c_r,
        e,
        128,
        Some(BlindingOpening {
            prime: &w.prime,
            r_w: &r_w,
            s: &s,
        }),
    )
    .unwrap();
    let transcript = Transcript::new(b"toy-nonrevocation");
    let proof = builder.prove(&transcript, &mut OsRng).unwrap();
    builder.verify(&proof, &transcript).unwrap();

    // recheck each verification equation with the oracle
    let c = BigInt::from(proof.challenge.clone());
    for (i, rel) in builder.statement().relations.iter().enumerate() {
        let mut lhs = 1u64;
        for (base, id) in &rel.terms {
            lhs = lhs * oracle_pow_qr(base.to_u64().unwrap(), &proof.responses[id.0]) % N;
        }
        let announcement = proof.announcements[i].to_u64().unwrap();
        let rhs = announcement * oracle_pow_qr(rel.target.to_u64().unwrap(), &c) % N;
        assert_eq!(lhs, rhs, "{}", rel.label);
    }
}

#[test]
fn pre_revocation_witness_fails_the_relation() {
    let mut acc = toy();
    acc.add_prime(big(3)).unwrap();
    acc.add_prime(big(5)).unwrap();
    let old = acc.witness_for(&big(5)).unwrap();
    acc.revoke_prime(&big(5)).unwrap();
    let public = acc.public();
    let (r_w, s) = (big(2), big(11));
    let (c_w, c_r) = blind_witness(&public, &old.witness, &r_w, &s);
    // no exponent-5 root of 64 is reachable from the old witness
    assert_ne!(oracle_modpow(old.witness.to_u64().unwrap(), 5, N), 64);

    let mut builder = ProofBuilder::new();
    let e = builder.secret(128, Some(BigInt::from(5)));
    add_membership_relations(
        &mut builder,
        &public,
        &c_w,
        &c_r,
        e,
        128,
        Some(BlindingOpening {
            prime: &old.prime,
            r_w: &r_w,
            s: &s,
        }),
    )
    .unwrap();
    assert_eq!(
        builder.prove(&Transcript::new(b"t"), &mut OsRng).unwrap_err().code(),
        "WITNESS_MISMATCH"
    );
}
