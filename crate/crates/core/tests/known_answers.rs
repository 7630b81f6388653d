//! Known-answer tests in the toy group, checked against small independent
//! oracles (u64/u128 arithmetic, trial factoring, exhaustive tables).

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rand::rngs::OsRng;
use sha2::{Digest, Sha256};
use vaxpass_core::prime::{is_probable_prime, MR_ROUNDS};
use vaxpass_core::{
    commit, hash_to_prime, setup_params, sigma_prove, RsaGroup, SecurityProfile, Statement,
    Transcript,
};

fn oracle_modpow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

fn oracle_factor(n: u64) -> (u64, u64) {
    let p = (2..n).find(|d| n % d == 0).unwrap();
    (p, n / p)
}

fn oracle_squares(n: u64) -> std::collections::BTreeSet<u64> {
    (1..n)
        .filter(|x| num_integer::gcd(*x, n) == 1)
        .map(|x| x * x % n)
        .collect()
}

#[test]
fn toy_setup_matches_trial_oracle() {
    let params = setup_params(SecurityProfile::ToyFixed, None).unwrap();
    let n = params.modulus.to_u64().unwrap();
    let (p, q) = oracle_factor(n);
    assert_eq!((p, q), (23, 47));
    // both safe primes
    assert_eq!(((p - 1) / 2, (q - 1) / 2), (11, 23));
    let qr = oracle_squares(n);
    assert_eq!(qr.len(), 253);
    let g = params.g.to_u64().unwrap();
    let h = params.h.to_u64().unwrap();
    assert_eq!((g, h), (4, 9));
    assert!(qr.contains(&g) && qr.contains(&h));
    // g and h have full order 253 in QR_n
    for x in [g, h] {
        let order = (1..=253).find(|&k| oracle_modpow(x, k, n) == 1).unwrap();
        assert_eq!(order, 253);
    }
}

#[test]
fn toy_commitment_values() {
    let params = setup_params(SecurityProfile::ToyFixed, None).unwrap();
    let c = commit(&params, &BigUint::from(2u32), &BigUint::from(3u32)).unwrap();
    let oracle = oracle_modpow(4, 2, 1081) * oracle_modpow(9, 3, 1081) % 1081;
    assert_eq!(oracle, 854);
    assert_eq!(c.value, BigUint::from(oracle));
}

#[test]
fn toy_sigma_proof_rechecked_by_oracle() {
    let params = setup_params(SecurityProfile::ToyFixed, None).unwrap();
    let mut st = Statement::new();
    let m = st.secret(256);
    let r = st.secret(params.randomness_bits());
    st.relation(
        "opening",
        &params.modulus,
        BigUint::from(854u32),
        vec![(params.g.clone(), m), (params.h.clone(), r)],
    );
    let t = Transcript::new(b"kat");
    let proof = sigma_prove(&st, &[BigInt::from(2), BigInt::from(3)], &t, &mut OsRng).unwrap();

    // recompute both sides with exponents reduced modulo the QR order 253
    let reduce = |x: &BigInt| -> u64 {
        let r = x % BigInt::from(253);
        let r = if r.sign() == num_bigint::Sign::Minus { r + 253 } else { r };
        r.to_u64().unwrap()
    };
    let s_m = reduce(&proof.responses[0]);
    let s_r = reduce(&proof.responses[1]);
    let c = reduce(&BigInt::from(proof.challenge.clone()));
    let lhs = oracle_modpow(4, s_m, 1081) * oracle_modpow(9, s_r, 1081) % 1081;
    let t0 = proof.announcements[0].to_u64().unwrap();
    let rhs = t0 * oracle_modpow(854, c, 1081) % 1081;
    assert_eq!(lhs, rhs);
    assert!(vaxpass_core::sigma_verify(&st, &proof, &t));
}

fn oracle_is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    'bases: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = oracle_modpow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn oracle_hash_to_prime_64(input: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"vaxpass/hash-to-prime");
    h.update(64u32.to_be_bytes());
    h.update(0u32.to_be_bytes());
    h.update(0u32.to_be_bytes());
    h.update(input);
    let digest = h.finalize();
    let mut x = u64::from_be_bytes(digest[..8].try_into().unwrap());
    x |= 1 << 63;
    x |= 1;
    while !oracle_is_prime_u64(x) {
        x += 2;
    }
    x
}

/// Frozen from the oracle above.
const SERIAL_1_PRIME_64: u64 = 9_804_964_785_646_755_731;

#[test]
fn hash_to_prime_known_answer() {
    let oracle = oracle_hash_to_prime_64(b"serial-1");
    assert_eq!(oracle, SERIAL_1_PRIME_64);
    let got = hash_to_prime(b"serial-1", 64);
    assert_eq!(got, BigUint::from(SERIAL_1_PRIME_64));
    assert!(is_probable_prime(&got, MR_ROUNDS, &mut OsRng));
    assert!(got >= BigUint::from(1u64 << 63));
}

#[test]
fn test_profile_shape() {
    let params = setup_params(SecurityProfile::Test, Some(b"seed")).unwrap();
    assert_eq!(params.modulus.bits(), 512);
    assert_eq!(params, setup_params(SecurityProfile::Test, Some(b"seed")).unwrap());
    let group = RsaGroup::generate(SecurityProfile::Test, &mut OsRng).unwrap();
    let (p, q) = group.factors();
    assert_eq!(group.modulus.bits(), 512);
    assert_eq!(p % 4u32, BigUint::from(3u32));
    assert_eq!(q % 4u32, BigUint::from(3u32));
}

#[test]
fn prod_profile_shape() {
    let params = setup_params(SecurityProfile::Prod, Some(b"prod-seed")).unwrap();
    assert_eq!(params.modulus.bits(), 2048);
    assert!(!params.insecure);
}
