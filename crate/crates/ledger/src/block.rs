use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vaxpass_core::canonical;

use crate::tx::Transaction;

pub const ZERO_HASH: [u8; 32] = [0u8; 32];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub height: u64,
    #[serde(with = "hex::serde")]
    pub prev_hash: [u8; 32],
    /// Milliseconds since the epoch. Advisory only.
    pub timestamp: i64,
    #[serde(with = "hex::serde")]
    pub tx_root: [u8; 32],
}

impl BlockHeader {
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(canonical::to_vec(self)).into()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
    #[serde(with = "hex::serde")]
    pub hash: [u8; 32],
}

/// Hash over the concatenated transaction hashes.
pub fn tx_root(hashes: &[[u8; 32]]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"vaxpass/tx-root");
    for t in hashes {
        h.update(t);
    }
    h.finalize().into()
}

impl Block {
    pub fn new(height: u64, prev_hash: [u8; 32], timestamp: i64, transactions: Vec<Transaction>) -> Block {
        let hashes: Vec<[u8; 32]> = transactions.iter().map(Transaction::hash).collect();
        let header = BlockHeader {
            height,
            prev_hash,
            timestamp,
            tx_root: tx_root(&hashes),
        };
        Block {
            hash: header.hash(),
            header,
            transactions,
        }
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn tx_hashes(&self) -> Vec<[u8; 32]> {
        self.transactions.iter().map(Transaction::hash).collect()
    }

    /// Header and body hashes recompute to the stored values.
    pub fn is_sealed(&self) -> bool {
        self.header.tx_root == tx_root(&self.tx_hashes()) && self.header.hash() == self.hash
    }

    pub fn to_line(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }

    /// Strict parse: the bytes must be exactly the canonical encoding.
    pub fn from_line(bytes: &[u8]) -> Option<Block> {
        canonical::from_slice_strict(bytes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChainVerdict {
    Valid,
    Invalid { height: u64 },
}

/// Check `blocks` as a contiguous run following a block with hash
/// `prev` at height `first - 1`. Pass `None` when the run starts at
/// genesis. The reported height is the position of the first bad block.
pub fn verify_segment(prev: Option<(u64, [u8; 32])>, blocks: &[Block]) -> ChainVerdict {
    let (mut expect_height, mut expect_prev) = match prev {
        Some((h, hash)) => (h + 1, hash),
        None => (0, ZERO_HASH),
    };
    for b in blocks {
        if b.header.height != expect_height || b.header.prev_hash != expect_prev || !b.is_sealed() {
            return ChainVerdict::Invalid { height: expect_height };
        }
        expect_prev = b.hash;
        expect_height += 1;
    }
    ChainVerdict::Valid
}

/// Whole chain from genesis.
pub fn verify_chain(blocks: &[Block]) -> ChainVerdict {
    verify_segment(None, blocks)
}

/// Chain check over stored lines; a line that is not a canonical block
/// is invalid at its position.
pub fn verify_chain_lines<L: AsRef<[u8]>>(lines: &[L]) -> ChainVerdict {
    let mut blocks = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match Block::from_line(line.as_ref()) {
            Some(b) => blocks.push(b),
            None => {
                return match verify_chain(&blocks) {
                    ChainVerdict::Valid => ChainVerdict::Invalid { height: i as u64 },
                    bad => bad,
                }
            }
        }
    }
    verify_chain(&blocks)
}

/// Header chain check used by query clients: `headers[0]` must hash to
/// `genesis` and each header must link to its predecessor.
pub fn verify_headers(genesis: &[u8; 32], headers: &[BlockHeader]) -> bool {
    let Some(first) = headers.first() else { return false };
    if first.height != 0 || first.prev_hash != ZERO_HASH || first.hash() != *genesis {
        return false;
    }
    headers
        .windows(2)
        .all(|w| w[1].height == w[0].height + 1 && w[1].prev_hash == w[0].hash())
}
