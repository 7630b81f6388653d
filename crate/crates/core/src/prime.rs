//! Primality testing, random and safe prime generation, hashing to primes.

use std::sync::LazyLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::{CryptoError, Result};

/// Miller-Rabin rounds used for every primality decision in this crate.
pub const MR_ROUNDS: usize = 64;

const SIEVE_LIMIT: u32 = 1 << 14;
const MAX_ATTEMPTS: usize = 100_000;
const MAX_SAFE_WINDOWS: usize = 1_000;

static SMALL_PRIMES: LazyLock<Vec<u32>> = LazyLock::new(|| {
    let limit = SIEVE_LIMIT as usize;
    let mut composite = vec![false; limit];
    let mut out = Vec::new();
    for i in 2..limit {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j < limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
});

fn small_factor(n: &BigUint) -> Option<bool> {
    // Some(true): n is a small prime; Some(false): n has a small factor.
    for &p in SMALL_PRIMES.iter() {
        if (n % p).is_zero() {
            return Some(*n == BigUint::from(p));
        }
    }
    None
}

/// Miller-Rabin with `rounds` bases drawn from `rng`, after trial division.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if let Some(answer) = small_factor(n) {
        return answer;
    }
    miller_rabin(n, rounds, rng)
}

fn miller_rabin<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random prime with exactly `bits` bits.
pub fn random_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 2 {
        return Err(CryptoError::OutOfRange("prime bit length"));
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        if bits > 2 {
            candidate.set_bit(0, true);
        }
        if is_probable_prime(&candidate, MR_ROUNDS, rng) {
            return Ok(candidate);
        }
    }
    Err(CryptoError::PrimeGenFailure(MAX_ATTEMPTS))
}

/// Random safe prime `p = 2q + 1` of exactly `bits` bits whose top two bits
/// are set, so a product of two such primes has exactly `2 * bits` bits.
/// Returns `(p, q)`.
pub fn random_safe_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<(BigUint, BigUint)> {
    if bits < 16 {
        return Err(CryptoError::OutOfRange("safe prime bit length"));
    }
    let q_bits = bits - 1;
    let primes = &*SMALL_PRIMES;
    let window: u32 = 1 << 16;
    let mut attempts = 0usize;
    for _ in 0..MAX_SAFE_WINDOWS {
        let mut base = rng.gen_biguint(q_bits);
        base.set_bit(q_bits - 1, true);
        base.set_bit(q_bits - 2, true);
        base.set_bit(0, true);
        let residues: Vec<u32> = primes
            .iter()
            .map(|&p| (&base % p).to_u32().expect("residue fits"))
            .collect();
        let mut delta = 0u32;
        while delta < window {
            attempts += 1;
            // q and 2q + 1 must both avoid every small prime
            let survives = primes.iter().zip(&residues).skip(1).all(|(&p, &r)| {
                let rq = ((r as u64 + delta as u64) % p as u64) as u32;
                rq != 0 && rq != (p - 1) / 2
            });
            if survives {
                let q = &base + delta;
                let p = (&q << 1u32) + 1u32;
                if p.bits() == bits
                    && BigUint::from(2u32).modpow(&(&p - 1u32), &p).is_one()
                    && miller_rabin(&q, MR_ROUNDS, rng)
                    && miller_rabin(&p, 2, rng)
                {
                    return Ok((p, q));
                }
            }
            delta += 2;
        }
    }
    Err(CryptoError::PrimeGenFailure(attempts))
}

fn hash_seed(input: &[u8], bits: u64, counter: u32) -> BigUint {
    let len = (bits as usize).div_ceil(8);
    let mut out = Vec::with_capacity(len + 32);
    let mut block = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(b"vaxpass/hash-to-prime");
        h.update((bits as u32).to_be_bytes());
        h.update(counter.to_be_bytes());
        h.update(block.to_be_bytes());
        h.update(input);
        out.extend_from_slice(&h.finalize());
        block += 1;
    }
    out.truncate(len);
    let mut x = BigUint::from_bytes_be(&out);
    let excess = len as u64 * 8 - bits;
    x >>= excess;
    x
}

/// Deterministically map `input` to a prime in `[2^(bits-1), 2^bits)`.
///
/// A SHA-256 derived seed has its top and bottom bits forced, then the
/// next prime at or above it is returned. If the search runs past `2^bits`
/// the seed is re-derived with an incremented counter.
pub fn hash_to_prime(input: &[u8], bits: u64) -> BigUint {
    assert!(bits >= 16, "hash_to_prime needs at least 16 bits");
    let limit = BigUint::one() << bits;
    let mut counter = 0u32;
    loop {
        let mut candidate = hash_seed(input, bits, counter);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        // bases for the primality test are a pure function of the input
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&Sha256::digest([b"mr-bases".as_slice(), input].concat()));
        let mut rng = ChaCha20Rng::from_seed(seed);
        while candidate < limit {
            if is_probable_prime(&candidate, MR_ROUNDS, &mut rng) {
                return candidate;
            }
            candidate += 2u32;
        }
        counter += 1;
    }
}

/// `gcd(a, b) == 1`
pub fn coprime(a: &BigUint, b: &BigUint) -> bool {
    a.gcd(b).is_one()
}
