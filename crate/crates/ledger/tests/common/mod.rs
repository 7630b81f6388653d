#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};

use rand::rngs::OsRng;
use serde::Serialize;
use vaxpass_agent::{Did, Identity};
use vaxpass_anoncreds::{issuer_keygen, CredentialSchema, IssuerKeyPair};
use vaxpass_core::SecurityProfile;
use vaxpass_ledger::{Cluster, Genesis, Receipt, RevRegDef, RevRegEntry, Transaction, TrustEntry, TxKind};
use vaxpass_revocation::{AccumulatorState, RegistryDelta, RegistryParams};

static SEQ: AtomicU64 = AtomicU64::new(1);

pub fn identity(seed: u8) -> Identity {
    Identity::from_seeds([seed; 32], [seed ^ 0x5a; 32], &format!("http://agent-{seed}.test"))
}

pub fn sign<T: Serialize>(kind: TxKind, payload: &T, who: &Identity) -> Transaction {
    Transaction::sign(kind, payload, who, SEQ.fetch_add(1, Ordering::Relaxed))
}

pub fn genesis(authority: &Identity, nodes: usize) -> Genesis {
    let endpoints = (0..nodes).map(|i| format!("http://node-{i}.test")).collect();
    Genesis::new(authority, nodes, endpoints, 1_600_000_000_000)
}

/// Cluster of `nodes` replicas with a fixed clock.
pub fn cluster(authority: &Identity, nodes: usize) -> Cluster {
    Cluster::new(genesis(authority, nodes)).unwrap().with_clock(|| 1_600_000_000_000)
}

pub fn register(c: &mut Cluster, who: &Identity) -> Receipt {
    c.submit(sign(TxKind::DidDoc, &who.document(), who)).unwrap()
}

pub fn trust_tx(authority: &Identity, did: Did, trusted: bool) -> Transaction {
    sign(TxKind::TrustList, &TrustEntry { did, trusted }, authority)
}

/// A registered and trusted issuer with a toy credential definition and
/// revocation registry on the ledger.
pub struct Issuer {
    pub id: Identity,
    pub schema: CredentialSchema,
    pub keys: IssuerKeyPair,
    pub registry: AccumulatorState,
    pub rev_reg_id: String,
}

impl Issuer {
    pub fn bootstrap(c: &mut Cluster, authority: &Identity, seed: u8, profile: SecurityProfile) -> Issuer {
        let id = identity(seed);
        register(c, &id);
        c.submit(trust_tx(authority, id.did(), true)).unwrap();
        let schema = CredentialSchema::vaccination();
        if c.state().schemas.get(&schema.schema_id).is_none() {
            c.submit(sign(TxKind::Schema, &schema, &id)).unwrap();
        }
        let keys = issuer_keygen(profile, &schema, id.did().as_str(), &mut OsRng).unwrap();
        c.submit(sign(TxKind::CredDef, keys.public(), &id)).unwrap();
        let registry = AccumulatorState::with_params(RegistryParams::generate(profile, &mut OsRng).unwrap());
        let rev_reg_id = RevRegDef::id_for(&keys.public().cred_def_id, "1");
        c.submit(sign(TxKind::RevRegDef, &rev_def(&id, &keys, &registry, &rev_reg_id), &id))
            .unwrap();
        Issuer {
            id,
            schema,
            keys,
            registry,
            rev_reg_id,
        }
    }

    pub fn entry(&self, delta: RegistryDelta) -> Transaction {
        sign(
            TxKind::RevRegEntry,
            &RevRegEntry {
                rev_reg_id: self.rev_reg_id.clone(),
                delta,
            },
            &self.id,
        )
    }
}

pub fn rev_def(id: &Identity, keys: &IssuerKeyPair, registry: &AccumulatorState, rev_reg_id: &str) -> RevRegDef {
    RevRegDef {
        rev_reg_id: rev_reg_id.into(),
        cred_def_id: keys.public().cred_def_id.clone(),
        issuer_did: id.did(),
        params: registry.params.clone(),
        value: registry.value.clone(),
    }
}
