//! Small helpers over `num-bigint` used throughout the workspace.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_traits::{One, Signed, Zero};
use rand::RngCore;

/// Big-endian encoding left-padded to `width` bytes.
///
/// Values wider than `width` are emitted unpadded; callers only pass
/// reduced group elements.
pub fn to_fixed_bytes(x: &BigUint, width: usize) -> Vec<u8> {
    let raw = if x.is_zero() { Vec::new() } else { x.to_bytes_be() };
    if raw.len() >= width {
        return raw;
    }
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Minimal big-endian bytes; zero encodes as the empty string.
pub fn minimal_bytes(x: &BigUint) -> Vec<u8> {
    if x.is_zero() {
        Vec::new()
    } else {
        x.to_bytes_be()
    }
}

/// Sign byte (0 for non-negative, 1 for negative) followed by the minimal magnitude.
pub fn signed_bytes(x: &BigInt) -> Vec<u8> {
    let mut out = vec![u8::from(x.sign() == Sign::Minus)];
    out.extend(minimal_bytes(x.magnitude()));
    out
}

pub fn byte_len(modulus: &BigUint) -> usize {
    (modulus.bits() as usize).div_ceil(8)
}

/// `base^exp mod modulus` for a signed exponent. `None` when a negative
/// exponent needs an inverse that does not exist.
pub fn pow_signed(base: &BigUint, exp: &BigInt, modulus: &BigUint) -> Option<BigUint> {
    if exp.is_negative() {
        let inv = base.modinv(modulus)?;
        Some(inv.modpow(exp.magnitude(), modulus))
    } else {
        Some(base.modpow(exp.magnitude(), modulus))
    }
}

pub fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    a.modinv(modulus)
}

/// Uniform integer in `[0, 2^bits)`.
pub fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    if bits == 0 {
        return BigUint::zero();
    }
    rng.gen_biguint(bits)
}

/// Uniform integer in `[0, bound)`.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    rng.gen_biguint_below(bound)
}

/// Random element of the quadratic-residue subgroup of `modulus`.
pub fn random_qr<R: RngCore + ?Sized>(rng: &mut R, modulus: &BigUint) -> BigUint {
    loop {
        let x = random_below(rng, modulus);
        if x > BigUint::one() && num_integer::Integer::gcd(&x, modulus).is_one() {
            return (&x * &x) % modulus;
        }
    }
}

pub fn pow2(bits: u32) -> BigUint {
    BigUint::one() << bits
}

/// Multiply a sequence of exponentiations: `prod base_i^{exp_i} mod modulus`.
pub fn multi_pow<'a, I>(terms: I, modulus: &BigUint) -> Option<BigUint>
where
    I: IntoIterator<Item = (&'a BigUint, &'a BigInt)>,
{
    let mut acc = BigUint::one() % modulus;
    for (base, exp) in terms {
        acc = acc * pow_signed(base, exp, modulus)? % modulus;
    }
    Some(acc)
}

pub fn to_signed(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}
