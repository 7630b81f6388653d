//! Fiat-Shamir transcripts.
//!
//! Absorptions are `(label, payload)` pairs encoded as length-prefixed
//! (u32, big-endian) byte strings under a domain label. The challenge is
//! SHA-256 over the whole encoding, read as a big-endian 256-bit integer.

use num_bigint::{BigInt, BigUint};
use sha2::{Digest, Sha256};

use crate::bigint::{byte_len, minimal_bytes, signed_bytes, to_fixed_bytes};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    label: Vec<u8>,
    items: Vec<(Vec<u8>, Vec<u8>)>,
}

fn put(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

impl Transcript {
    pub fn new(label: &[u8]) -> Self {
        assert!(!label.is_empty(), "transcript label must be non-empty");
        Transcript {
            label: label.to_vec(),
            items: Vec::new(),
        }
    }

    pub fn absorb(&mut self, label: &[u8], payload: &[u8]) {
        self.items.push((label.to_vec(), payload.to_vec()));
    }

    pub fn absorb_uint(&mut self, label: &[u8], x: &BigUint) {
        self.absorb(label, &minimal_bytes(x));
    }

    pub fn absorb_int(&mut self, label: &[u8], x: &BigInt) {
        self.absorb(label, &signed_bytes(x));
    }

    /// Group element as fixed-width big-endian of the modulus byte length.
    pub fn absorb_element(&mut self, label: &[u8], x: &BigUint, modulus: &BigUint) {
        self.absorb(label, &to_fixed_bytes(x, byte_len(modulus)));
    }

    pub fn items(&self) -> &[(Vec<u8>, Vec<u8>)] {
        &self.items
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put(&mut out, b"vaxpass/transcript/v1");
        put(&mut out, &self.label);
        for (label, payload) in &self.items {
            put(&mut out, label);
            put(&mut out, payload);
        }
        out
    }

    /// 256-bit challenge; a pure function of the label and absorbed items in order.
    pub fn challenge(&self) -> BigUint {
        BigUint::from_bytes_be(&Sha256::digest(self.encode()))
    }
}

/// One-shot challenge over unlabeled items.
pub fn transcript_challenge(label: &[u8], items: &[&[u8]]) -> BigUint {
    let mut t = Transcript::new(label);
    for item in items {
        t.absorb(b"item", item);
    }
    t.challenge()
}
