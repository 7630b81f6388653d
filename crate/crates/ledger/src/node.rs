use std::path::Path;

use serde::{Deserialize, Serialize};
use vaxpass_agent::{DidDocument, Identity};
use vaxpass_core::canonical;

use crate::block::{tx_root, verify_headers, verify_segment, Block, BlockHeader, ChainVerdict, ZERO_HASH};
use crate::state::{LedgerState, Location};
use crate::store::BlockStore;
use crate::tx::{Transaction, TxKind};
use crate::{LedgerError, Result};

/// Network description shared by every node and pinned by clients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genesis {
    pub authority: DidDocument,
    pub bootstrap: Transaction,
    pub nodes: usize,
    pub endpoints: Vec<String>,
    pub timestamp: i64,
}

impl Genesis {
    pub fn new(authority: &Identity, nodes: usize, endpoints: Vec<String>, timestamp: i64) -> Genesis {
        let doc = authority.document();
        Genesis {
            bootstrap: Transaction::sign(TxKind::DidDoc, &doc, authority, 0),
            authority: doc,
            nodes,
            endpoints,
            timestamp,
        }
    }

    pub fn block(&self) -> Block {
        Block::new(0, ZERO_HASH, self.timestamp, vec![self.bootstrap.clone()])
    }

    pub fn hash(&self) -> [u8; 32] {
        self.block().hash
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Genesis> {
        canonical::from_slice_strict(bytes)
    }

    pub fn quorum(&self) -> usize {
        self.nodes / 2 + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub height: u64,
    pub tx_index: u32,
    #[serde(with = "hex::serde")]
    pub block_hash: [u8; 32],
}

/// Off-chain record of a refused transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    #[serde(with = "hex::serde")]
    pub tx_hash: [u8; 32],
    pub code: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub height: u64,
    #[serde(with = "hex::serde")]
    pub tip: [u8; 32],
    pub nodes: usize,
    pub live: usize,
    pub quorum: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hash32(#[serde(with = "hex::serde")] pub [u8; 32]);

/// Answer to a query with what a client needs to check inclusion: the
/// committing transaction, every transaction hash of its block and the
/// header chain from genesis to the tip.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub location: Location,
    pub transaction: Transaction,
    pub tx_hashes: Vec<Hash32>,
    pub headers: Vec<BlockHeader>,
}

impl QueryResponse {
    /// Hash of the block holding the transaction.
    pub fn block_hash(&self) -> Option<[u8; 32]> {
        self.headers.get(self.location.height as usize).map(BlockHeader::hash)
    }

    pub fn verify(&self, genesis: &[u8; 32]) -> Result<()> {
        let fail = |m: &str| Err(LedgerError::InclusionFailed(m.into()));
        if !verify_headers(genesis, &self.headers) {
            return fail("header chain does not link to the pinned genesis");
        }
        let Some(header) = self.headers.get(self.location.height as usize) else {
            return fail("block outside the header chain");
        };
        let hashes: Vec<[u8; 32]> = self.tx_hashes.iter().map(|h| h.0).collect();
        if header.tx_root != tx_root(&hashes) {
            return fail("transaction hashes do not match the block");
        }
        if hashes.get(self.location.index as usize) != Some(&self.transaction.hash()) {
            return fail("transaction is not at the stated position");
        }
        Ok(())
    }
}

/// One copy of the log with the state it replays to.
#[derive(Debug)]
pub struct Replica {
    pub blocks: Vec<Block>,
    pub state: LedgerState,
    pub alive: bool,
    store: Option<BlockStore>,
}

impl Replica {
    pub fn new(genesis: &Genesis) -> Result<Replica> {
        Ok(Replica {
            blocks: vec![genesis.block()],
            state: LedgerState::genesis(&genesis.bootstrap)?,
            alive: true,
            store: None,
        })
    }

    /// Load or initialise a replica backed by a block file.
    pub fn open(genesis: &Genesis, path: &Path) -> Result<Replica> {
        let (mut store, blocks) = BlockStore::open(path)?;
        let g = genesis.block();
        if blocks.is_empty() {
            store.append(&g)?;
            let mut r = Replica::new(genesis)?;
            r.store = Some(store);
            return Ok(r);
        }
        if blocks[0] != g {
            return Err(LedgerError::ForkDetected { height: 0 });
        }
        let state = LedgerState::replay(&blocks)?;
        Ok(Replica {
            blocks,
            state,
            alive: true,
            store: Some(store),
        })
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("genesis always present")
    }

    /// Check a proposed block against this replica's tip without changing
    /// anything.
    pub fn prepare(&self, block: &Block) -> Result<LedgerState> {
        let tip = self.tip();
        if let ChainVerdict::Invalid { height } =
            verify_segment(Some((tip.height(), tip.hash)), std::slice::from_ref(block))
        {
            return Err(LedgerError::InvalidBlock { height });
        }
        self.state.apply_block(block)
    }

    fn commit(&mut self, block: Block, state: LedgerState) -> Result<()> {
        if let Some(store) = &mut self.store {
            store.append(&block)?;
        }
        self.blocks.push(block);
        self.state = state;
        Ok(())
    }

    /// Catch up from `leader`'s log. Every missing block is verified and
    /// replayed before any is accepted.
    pub fn sync_from(&mut self, leader: &[Block]) -> Result<usize> {
        if leader.len() < self.blocks.len() {
            return Err(LedgerError::ForkDetected {
                height: leader.len() as u64,
            });
        }
        if let Some(i) = self.blocks.iter().zip(leader).position(|(a, b)| a.hash != b.hash) {
            return Err(LedgerError::ForkDetected { height: i as u64 });
        }
        let missing = &leader[self.blocks.len()..];
        let tip = self.tip();
        if let ChainVerdict::Invalid { height } = verify_segment(Some((tip.height(), tip.hash)), missing) {
            return Err(LedgerError::InvalidBlock { height });
        }
        let mut state = self.state.clone();
        for b in missing {
            state = state.apply_block(b)?;
        }
        for b in missing {
            if let Some(store) = &mut self.store {
                store.append(b)?;
            }
            self.blocks.push(b.clone());
        }
        self.state = state;
        Ok(missing.len())
    }
}

/// `N` replicas in one process with a static leader at index 0.
pub struct Cluster {
    pub genesis: Genesis,
    pub replicas: Vec<Replica>,
    pub rejected: Vec<Rejection>,
    clock: Box<dyn Fn() -> i64 + Send + Sync>,
}

impl std::fmt::Debug for Cluster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cluster")
            .field("nodes", &self.replicas.len())
            .field("height", &self.replicas[0].height())
            .finish()
    }
}

fn wall_clock() -> i64 {
    chrono::Utc::now().timestamp_millis()
}

impl Cluster {
    pub fn new(genesis: Genesis) -> Result<Cluster> {
        let replicas = (0..genesis.nodes.max(1))
            .map(|_| Replica::new(&genesis))
            .collect::<Result<_>>()?;
        Ok(Cluster {
            genesis,
            replicas,
            rejected: Vec::new(),
            clock: Box::new(wall_clock),
        })
    }

    /// Replicas persisted as `node-<i>.jsonl` under `dir`.
    pub fn open(genesis: Genesis, dir: &Path) -> Result<Cluster> {
        std::fs::create_dir_all(dir).map_err(|e| LedgerError::Store(e.to_string()))?;
        let replicas = (0..genesis.nodes.max(1))
            .map(|i| Replica::open(&genesis, &dir.join(format!("node-{i}.jsonl"))))
            .collect::<Result<Vec<_>>>()?;
        let mut c = Cluster {
            genesis,
            replicas,
            rejected: Vec::new(),
            clock: Box::new(wall_clock),
        };
        c.sync_followers()?;
        Ok(c)
    }

    pub fn with_clock(mut self, clock: impl Fn() -> i64 + Send + Sync + 'static) -> Cluster {
        self.clock = Box::new(clock);
        self
    }

    pub fn quorum(&self) -> usize {
        self.replicas.len() / 2 + 1
    }

    pub fn set_alive(&mut self, node: usize, alive: bool) {
        self.replicas[node].alive = alive;
    }

    pub fn leader(&self) -> &Replica {
        &self.replicas[0]
    }

    /// Committed state as seen by the first live replica.
    pub fn view(&self) -> Result<&Replica> {
        self.replicas
            .iter()
            .find(|r| r.alive)
            .ok_or_else(|| LedgerError::Unavailable("no live replica".into()))
    }

    pub fn state(&self) -> &LedgerState {
        &self.leader().state
    }

    pub fn blocks(&self) -> &[Block] {
        &self.leader().blocks
    }

    /// Bring every live follower up to the leader's log.
    pub fn sync_followers(&mut self) -> Result<()> {
        let (leader, followers) = self.replicas.split_first_mut().expect("at least one replica");
        for f in followers.iter_mut().filter(|f| f.alive) {
            f.sync_from(&leader.blocks)?;
        }
        Ok(())
    }

    /// Validate, seal and replicate one transaction. The block is first
    /// prepared on every live replica; it is committed only if at least a
    /// quorum accepted it, otherwise nothing changes anywhere.
    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt> {
        let result = self.try_submit(&tx);
        if let Err(e) = &result {
            self.rejected.push(Rejection {
                tx_hash: tx.hash(),
                code: e.code().into(),
            });
        }
        result
    }

    fn try_submit(&mut self, tx: &Transaction) -> Result<Receipt> {
        let quorum = self.quorum();
        if !self.replicas[0].alive {
            return Err(LedgerError::NoQuorum("leader is down".into()));
        }
        let live = self.replicas.iter().filter(|r| r.alive).count();
        if live < quorum {
            return Err(LedgerError::NoQuorum(format!("{live} of {quorum} needed replicas are live")));
        }
        let leader = &self.replicas[0];
        let tip = leader.tip();
        let block = Block::new(tip.height() + 1, tip.hash, (self.clock)(), vec![tx.clone()]);
        let leader_state = leader.state.apply(
            tx,
            Location {
                height: block.height(),
                index: 0,
            },
        )?;

        self.sync_followers()?;
        let mut prepared = vec![Some(leader_state)];
        for f in &self.replicas[1..] {
            prepared.push(if f.alive { f.prepare(&block).ok() } else { None });
        }
        let acks = prepared.iter().filter(|p| p.is_some()).count();
        if acks < quorum {
            return Err(LedgerError::NoQuorum(format!("{acks} of {quorum} acknowledgements")));
        }
        for (r, state) in self.replicas.iter_mut().zip(prepared) {
            if let Some(state) = state {
                r.commit(block.clone(), state)?;
            }
        }
        Ok(Receipt {
            height: block.height(),
            tx_index: 0,
            block_hash: block.hash,
        })
    }

    pub fn query(&self, kind: TxKind, key: &str, epoch: Option<u64>) -> Result<QueryResponse> {
        let r = self.view()?;
        let location = r.state.locate(kind, key, epoch)?;
        let block = &r.blocks[location.height as usize];
        Ok(QueryResponse {
            location,
            transaction: block.transactions[location.index as usize].clone(),
            tx_hashes: block.tx_hashes().into_iter().map(Hash32).collect(),
            headers: r.blocks.iter().map(|b| b.header.clone()).collect(),
        })
    }

    pub fn health(&self) -> Health {
        let tip = self.leader().tip();
        Health {
            height: tip.height(),
            tip: tip.hash,
            nodes: self.replicas.len(),
            live: self.replicas.iter().filter(|r| r.alive).count(),
            quorum: self.quorum(),
        }
    }
}
