use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use vaxpass_agent::{Did, DidDocument};
use vaxpass_anoncreds::{CredentialDefinition, CredentialSchema};
use vaxpass_core::canonical;
use vaxpass_revocation::{PublicAccumulator, RegistryDelta};

use crate::block::Block;
use crate::tx::{RevRegDef, RevRegEntry, Transaction, TrustEntry, TxKind};
use crate::{LedgerError, Result};

/// Position of a committed transaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub height: u64,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry<T> {
    pub value: T,
    pub at: Location,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub value: BigUint,
    /// `None` for epoch 0, which comes from the registry definition.
    pub delta: Option<RegistryDelta>,
    pub at: Location,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevRegister {
    pub definition: Entry<RevRegDef>,
    pub epochs: Vec<EpochRecord>,
    /// Accumulated handle primes; they are public through the deltas.
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub members: Vec<BigUint>,
}

impl RevRegister {
    pub fn current(&self) -> &EpochRecord {
        self.epochs.last().expect("epoch 0 always present")
    }

    pub fn accumulator(&self, epoch: Option<u64>) -> Option<PublicAccumulator> {
        let rec = match epoch {
            Some(e) => self.epochs.get(usize::try_from(e).ok()?)?,
            None => self.current(),
        };
        Some(PublicAccumulator {
            params: self.definition.value.params.clone(),
            value: rec.value.clone(),
            epoch: rec.epoch,
        })
    }
}

/// Everything the ledger knows, keyed by identifier. Every map is ordered
/// so the canonical encoding is a function of the applied log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerState {
    pub authority: Did,
    pub dids: BTreeMap<Did, Entry<DidDocument>>,
    pub schemas: BTreeMap<String, Entry<CredentialSchema>>,
    pub cred_defs: BTreeMap<String, Entry<CredentialDefinition>>,
    pub rev_regs: BTreeMap<String, RevRegister>,
    pub trusted: BTreeMap<Did, Location>,
    pub sequences: BTreeMap<Did, u64>,
}

fn unauthorized(m: impl Into<String>) -> LedgerError {
    LedgerError::Unauthorized(m.into())
}

fn invalid(m: impl Into<String>) -> LedgerError {
    LedgerError::InvalidPayload(m.into())
}

impl LedgerState {
    /// State after the bootstrap transaction: the authority's own DID
    /// document, self-signed.
    pub fn genesis(bootstrap: &Transaction) -> Result<LedgerState> {
        if bootstrap.kind != TxKind::DidDoc {
            return Err(invalid("genesis must register the authority DID"));
        }
        let doc: DidDocument = bootstrap.decode()?;
        let empty = LedgerState {
            authority: doc.id.clone(),
            dids: BTreeMap::new(),
            schemas: BTreeMap::new(),
            cred_defs: BTreeMap::new(),
            rev_regs: BTreeMap::new(),
            trusted: BTreeMap::new(),
            sequences: BTreeMap::new(),
        };
        empty.apply(bootstrap, Location { height: 0, index: 0 })
    }

    /// Rebuild from a full chain starting at genesis. Chain linkage is
    /// not checked here.
    pub fn replay(blocks: &[Block]) -> Result<LedgerState> {
        let first = blocks.first().ok_or(LedgerError::InvalidBlock { height: 0 })?;
        let [bootstrap] = first.transactions.as_slice() else {
            return Err(LedgerError::InvalidBlock { height: 0 });
        };
        let mut state = LedgerState::genesis(bootstrap).map_err(|_| LedgerError::InvalidBlock { height: 0 })?;
        for b in &blocks[1..] {
            state = state.apply_block(b)?;
        }
        Ok(state)
    }

    /// Apply every transaction of `block`; any rejection invalidates it.
    pub fn apply_block(&self, block: &Block) -> Result<LedgerState> {
        let height = block.height();
        let mut state = self.clone();
        for (i, tx) in block.transactions.iter().enumerate() {
            let at = Location {
                height,
                index: i as u32,
            };
            state = state.apply(tx, at).map_err(|_| LedgerError::InvalidBlock { height })?;
        }
        Ok(state)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }

    /// Pure transition. Rejections leave `self` untouched.
    pub fn apply(&self, tx: &Transaction, at: Location) -> Result<LedgerState> {
        self.authenticate(tx)?;
        let mut next = self.clone();
        match tx.kind {
            TxKind::DidDoc => next.did_doc(tx, at)?,
            TxKind::Schema => next.schema(tx, at)?,
            TxKind::CredDef => next.cred_def(tx, at)?,
            TxKind::RevRegDef => next.rev_reg_def(tx, at)?,
            TxKind::RevRegEntry => next.rev_reg_entry(tx, at)?,
            TxKind::TrustList => next.trust_list(tx, at)?,
        }
        next.sequences.insert(tx.author.clone(), tx.sequence);
        Ok(next)
    }

    /// Signature against the registered key (or the enclosed document for
    /// DID_DOC) and a fresh sequence number.
    fn authenticate(&self, tx: &Transaction) -> Result<()> {
        let doc = if tx.kind == TxKind::DidDoc {
            let doc: DidDocument = tx.decode()?;
            doc.validate().map_err(|e| invalid(e.to_string()))?;
            if doc.id != tx.author {
                return Err(unauthorized("DID document must be signed by its subject"));
            }
            doc
        } else {
            self.dids
                .get(&tx.author)
                .map(|e| e.value.clone())
                .ok_or_else(|| unauthorized(format!("{} is not registered", tx.author)))?
        };
        doc.verify(&tx.signed_bytes(), &tx.signature)
            .map_err(|_| unauthorized("bad signature"))?;
        if let Some(&last) = self.sequences.get(&tx.author) {
            if tx.sequence <= last {
                return Err(LedgerError::StaleSequence {
                    last,
                    got: tx.sequence,
                });
            }
        }
        Ok(())
    }

    fn require_trusted(&self, author: &Did) -> Result<()> {
        if self.trusted.contains_key(author) {
            Ok(())
        } else {
            Err(unauthorized(format!("{author} is not on the trust list")))
        }
    }

    /// New documents are inserted; a controller may replace its own
    /// document with a different one. Resubmitting the same document is a
    /// duplicate.
    fn did_doc(&mut self, tx: &Transaction, at: Location) -> Result<()> {
        let doc: DidDocument = tx.decode()?;
        if let Some(existing) = self.dids.get(&doc.id) {
            if existing.value == doc {
                return Err(LedgerError::DuplicateId(doc.id.to_string()));
            }
        }
        self.dids.insert(doc.id.clone(), Entry { value: doc, at });
        Ok(())
    }

    fn schema(&mut self, tx: &Transaction, at: Location) -> Result<()> {
        let schema: CredentialSchema = tx.decode()?;
        schema.validate().map_err(|e| invalid(e.to_string()))?;
        if self.schemas.contains_key(&schema.schema_id) {
            return Err(LedgerError::DuplicateId(schema.schema_id));
        }
        self.schemas.insert(schema.schema_id.clone(), Entry { value: schema, at });
        Ok(())
    }

    fn cred_def(&mut self, tx: &Transaction, at: Location) -> Result<()> {
        self.require_trusted(&tx.author)?;
        let def: CredentialDefinition = tx.decode()?;
        if def.issuer_did != tx.author.as_str() {
            return Err(unauthorized("credential definition names another issuer"));
        }
        let schema = self
            .schemas
            .get(&def.schema_id)
            .ok_or_else(|| LedgerError::NotFound(def.schema_id.clone()))?;
        if def.public_key.r.len() != schema.value.arity() {
            return Err(invalid("key size does not match the schema"));
        }
        if def.cred_def_id != format!("{}:cred-def:{}", def.issuer_did, def.schema_id) {
            return Err(invalid("malformed credential definition id"));
        }
        if self.cred_defs.contains_key(&def.cred_def_id) {
            return Err(LedgerError::DuplicateId(def.cred_def_id));
        }
        self.cred_defs.insert(def.cred_def_id.clone(), Entry { value: def, at });
        Ok(())
    }

    fn rev_reg_def(&mut self, tx: &Transaction, at: Location) -> Result<()> {
        self.require_trusted(&tx.author)?;
        let def: RevRegDef = tx.decode()?;
        if def.issuer_did != tx.author {
            return Err(unauthorized("registry names another issuer"));
        }
        let cd = self
            .cred_defs
            .get(&def.cred_def_id)
            .ok_or_else(|| LedgerError::NotFound(def.cred_def_id.clone()))?;
        if cd.value.issuer_did != tx.author.as_str() {
            return Err(unauthorized("credential definition belongs to another issuer"));
        }
        let prefix = format!("{}:rev-reg:", def.cred_def_id);
        if !def.rev_reg_id.starts_with(&prefix) || def.rev_reg_id.len() == prefix.len() {
            return Err(invalid("malformed registry id"));
        }
        let p = &def.params;
        if p.base >= p.modulus || p.blinding >= p.modulus || def.value != p.base {
            return Err(invalid("registry must start at its base"));
        }
        if self.rev_regs.contains_key(&def.rev_reg_id) {
            return Err(LedgerError::DuplicateId(def.rev_reg_id));
        }
        let epoch0 = EpochRecord {
            epoch: 0,
            value: def.value.clone(),
            delta: None,
            at,
        };
        self.rev_regs.insert(
            def.rev_reg_id.clone(),
            RevRegister {
                definition: Entry { value: def, at },
                epochs: vec![epoch0],
                members: Vec::new(),
            },
        );
        Ok(())
    }

    /// Only the registry's issuer may publish entries. The new value is
    /// checked against the previous one: `prev^{prod added} = value^{prod revoked}`.
    fn rev_reg_entry(&mut self, tx: &Transaction, at: Location) -> Result<()> {
        let entry: RevRegEntry = tx.decode()?;
        let reg = self
            .rev_regs
            .get_mut(&entry.rev_reg_id)
            .ok_or_else(|| LedgerError::NotFound(entry.rev_reg_id.clone()))?;
        if reg.definition.value.issuer_did != tx.author {
            return Err(unauthorized("only the registry issuer may update it"));
        }
        let d = &entry.delta;
        let current = reg.current();
        if d.from_epoch != current.epoch || d.to_epoch != current.epoch + 1 {
            return Err(LedgerError::EpochGap {
                expected: current.epoch,
            });
        }
        if d.added.is_empty() && d.revoked.is_empty() {
            return Err(invalid("empty delta"));
        }
        let mut members: BTreeSet<BigUint> = reg.members.iter().cloned().collect();
        for p in &d.revoked {
            if !members.remove(p) {
                return Err(invalid("revoked handle is not a member"));
            }
        }
        for p in &d.added {
            if p.bits() < 2 || !members.insert(p.clone()) {
                return Err(invalid("added handle already present"));
            }
        }
        let n = &reg.definition.value.params.modulus;
        if d.value >= *n {
            return Err(invalid("accumulator value out of range"));
        }
        let added: BigUint = d.added.iter().product();
        let revoked: BigUint = d.revoked.iter().product();
        if current.value.modpow(&added, n) != d.value.modpow(&revoked, n) {
            return Err(invalid("accumulator value does not follow from the delta"));
        }
        reg.members = members.into_iter().collect();
        reg.epochs.push(EpochRecord {
            epoch: d.to_epoch,
            value: d.value.clone(),
            delta: Some(entry.delta),
            at,
        });
        Ok(())
    }

    fn trust_list(&mut self, tx: &Transaction, at: Location) -> Result<()> {
        if tx.author != self.authority {
            return Err(unauthorized("only the genesis authority edits the trust list"));
        }
        let e: TrustEntry = tx.decode()?;
        if !self.dids.contains_key(&e.did) {
            return Err(LedgerError::NotFound(e.did.to_string()));
        }
        match (e.trusted, self.trusted.contains_key(&e.did)) {
            (true, true) => return Err(LedgerError::DuplicateId(e.did.to_string())),
            (false, false) => return Err(LedgerError::NotFound(e.did.to_string())),
            (true, false) => {
                self.trusted.insert(e.did, at);
            }
            (false, true) => {
                self.trusted.remove(&e.did);
            }
        }
        Ok(())
    }

    /// Where the entry answering `(kind, key, epoch)` was committed.
    /// `epoch` only applies to REV_REG_ENTRY; epoch 0 resolves to the
    /// registry definition.
    pub fn locate(&self, kind: TxKind, key: &str, epoch: Option<u64>) -> Result<Location> {
        let missing = || LedgerError::NotFound(format!("{} {key}", kind.as_str()));
        if epoch.is_some() && kind != TxKind::RevRegEntry {
            return Err(invalid("epoch applies to REV_REG_ENTRY only"));
        }
        let did = || Did::parse(key).map_err(|_| missing());
        Ok(match kind {
            TxKind::DidDoc => self.dids.get(&did()?).ok_or_else(missing)?.at,
            TxKind::Schema => self.schemas.get(key).ok_or_else(missing)?.at,
            TxKind::CredDef => self.cred_defs.get(key).ok_or_else(missing)?.at,
            TxKind::RevRegDef => self.rev_regs.get(key).ok_or_else(missing)?.definition.at,
            TxKind::RevRegEntry => {
                let reg = self.rev_regs.get(key).ok_or_else(missing)?;
                match epoch {
                    None => reg.current().at,
                    Some(e) => {
                        let i = usize::try_from(e).map_err(|_| missing())?;
                        reg.epochs.get(i).ok_or_else(missing)?.at
                    }
                }
            }
            TxKind::TrustList => *self.trusted.get(&did()?).ok_or_else(missing)?,
        })
    }

    /// Deltas after `from_epoch`, in order.
    pub fn deltas(&self, rev_reg_id: &str, from_epoch: u64) -> Result<Vec<RegistryDelta>> {
        let reg = self
            .rev_regs
            .get(rev_reg_id)
            .ok_or_else(|| LedgerError::NotFound(rev_reg_id.into()))?;
        if from_epoch > reg.current().epoch {
            return Err(LedgerError::EpochGap {
                expected: reg.current().epoch,
            });
        }
        Ok(reg
            .epochs
            .iter()
            .filter(|r| r.epoch > from_epoch)
            .filter_map(|r| r.delta.clone())
            .collect())
    }

    pub fn is_trusted(&self, did: &Did) -> bool {
        self.trusted.contains_key(did)
    }
}
