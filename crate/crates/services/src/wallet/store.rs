//! Encrypted wallet file.
//!
//! Layout: `magic(8) | version(2) | m_cost(4) | t_cost(4) | p_cost(4) |
//! salt(16) | nonce(24) | ciphertext`, integers big-endian. The key is
//! Argon2id over the passphrase; the cipher is XChaCha20-Poly1305 with the
//! whole header as associated data, so any changed byte fails to open.

use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use argon2::{Algorithm, Argon2, Params, Version};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use fs4::fs_std::FileExt;
use rand::rngs::OsRng;
use rand::RngCore;

use crate::{write_atomic, Result, ServiceError};

pub const MAGIC: &[u8; 8] = b"VXPWALLT";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 2 + 12 + 16 + 24;

/// Upper bounds accepted when opening, so a crafted header cannot demand
/// unbounded work.
const MAX_M_COST: u32 = 1 << 20;
const MAX_T_COST: u32 = 16;
const MAX_P_COST: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KdfParams {
    /// KiB of memory.
    pub m_cost: u32,
    pub t_cost: u32,
    pub p_cost: u32,
}

impl Default for KdfParams {
    fn default() -> Self {
        KdfParams {
            m_cost: Params::DEFAULT_M_COST,
            t_cost: Params::DEFAULT_T_COST,
            p_cost: Params::DEFAULT_P_COST,
        }
    }
}

impl KdfParams {
    /// Cheap parameters for tests.
    pub fn fast() -> Self {
        KdfParams {
            m_cost: 64,
            t_cost: 1,
            p_cost: 1,
        }
    }

    fn derive(&self, passphrase: &[u8], salt: &[u8]) -> Result<[u8; 32]> {
        let params = Params::new(self.m_cost, self.t_cost, self.p_cost, Some(32))
            .map_err(|e| ServiceError::CorruptStore(format!("kdf parameters: {e}")))?;
        let mut key = [0u8; 32];
        Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
            .hash_password_into(passphrase, salt, &mut key)
            .map_err(|e| ServiceError::CorruptStore(format!("kdf: {e}")))?;
        Ok(key)
    }
}

pub fn seal(plaintext: &[u8], passphrase: &[u8], kdf: KdfParams) -> Result<Vec<u8>> {
    let mut salt = [0u8; 16];
    let mut nonce = [0u8; 24];
    OsRng.fill_bytes(&mut salt);
    OsRng.fill_bytes(&mut nonce);
    let mut out = Vec::with_capacity(HEADER_LEN + plaintext.len() + 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_be_bytes());
    for v in [kdf.m_cost, kdf.t_cost, kdf.p_cost] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&salt);
    out.extend_from_slice(&nonce);
    let key = kdf.derive(passphrase, &salt)?;
    let ct = XChaCha20Poly1305::new(&key.into())
        .encrypt(XNonce::from_slice(&nonce), Payload { msg: plaintext, aad: &out })
        .expect("encryption does not fail");
    out.extend_from_slice(&ct);
    Ok(out)
}

/// Decrypt, returning the plaintext and the KDF parameters it was sealed
/// with.
pub fn open(bytes: &[u8], passphrase: &[u8]) -> Result<(Vec<u8>, KdfParams)> {
    if bytes.len() < HEADER_LEN + 16 || &bytes[..8] != MAGIC {
        return Err(ServiceError::CorruptStore("missing wallet header".into()));
    }
    let version = u16::from_be_bytes([bytes[8], bytes[9]]);
    if version != VERSION {
        return Err(ServiceError::CorruptStore(format!("unsupported wallet version {version}")));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
    let kdf = KdfParams {
        m_cost: word(10),
        t_cost: word(14),
        p_cost: word(18),
    };
    if kdf.m_cost > MAX_M_COST || kdf.t_cost > MAX_T_COST || kdf.p_cost > MAX_P_COST {
        return Err(ServiceError::CorruptStore("kdf parameters out of range".into()));
    }
    let (header, ct) = bytes.split_at(HEADER_LEN);
    let salt = &header[22..38];
    let nonce = &header[38..62];
    let key = kdf.derive(passphrase, salt)?;
    XChaCha20Poly1305::new(&key.into())
        .decrypt(XNonce::from_slice(nonce), Payload { msg: ct, aad: header })
        .map(|plain| (plain, kdf))
        .map_err(|_| ServiceError::DecryptFailed)
}

/// A wallet file held under an exclusive lock on `<path>.lock`.
#[derive(Debug)]
pub struct LockedFile {
    pub path: PathBuf,
    _lock: File,
}

impl LockedFile {
    pub fn acquire(path: &Path) -> Result<LockedFile> {
        let mut lock_path = path.as_os_str().to_owned();
        lock_path.push(".lock");
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(PathBuf::from(lock_path))?;
        if !lock.try_lock_exclusive()? {
            return Err(ServiceError::StoreLocked);
        }
        Ok(LockedFile {
            path: path.to_path_buf(),
            _lock: lock,
        })
    }

    pub fn read(&self) -> Result<Vec<u8>> {
        Ok(std::fs::read(&self.path)?)
    }

    pub fn write(&self, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path, bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_wrong_passphrase() {
        let sealed = seal(b"hello wallet", b"pw", KdfParams::fast()).unwrap();
        assert_eq!(open(&sealed, b"pw").unwrap(), (b"hello wallet".to_vec(), KdfParams::fast()));
        assert_eq!(open(&sealed, b"pW").unwrap_err().code(), "DECRYPT_FAILED");
        assert_eq!(open(&sealed[..20], b"pw").unwrap_err().code(), "CORRUPT_STORE");
    }

    #[test]
    fn every_byte_flip_fails() {
        let sealed = seal(br#"{"credentials":[]}"#, b"pw", KdfParams::fast()).unwrap();
        for i in 0..sealed.len() {
            let mut t = sealed.clone();
            t[i] ^= 0x01;
            let err = open(&t, b"pw").unwrap_err();
            assert!(matches!(err.code(), "DECRYPT_FAILED" | "CORRUPT_STORE"), "byte {i}: {err}");
        }
    }

    #[test]
    fn second_lock_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.vxp");
        let a = LockedFile::acquire(&p).unwrap();
        assert_eq!(LockedFile::acquire(&p).unwrap_err().code(), "STORE_LOCKED");
        drop(a);
        LockedFile::acquire(&p).unwrap();
    }
}
