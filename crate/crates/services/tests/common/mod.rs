#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use rand::rngs::OsRng;
use serde_json::{json, Value};
use vaxpass_agent::{Envelope, Identity, Inbound};
use vaxpass_core::SecurityProfile;
use vaxpass_ledger::{Cluster, Genesis, LedgerApi, LocalLedger, Transaction, TrustEntry, TxKind};
use vaxpass_services::issuer::{IssuerService, IssuerState};
use vaxpass_services::peer::{Exchange, InProcess};
use vaxpass_services::verifier::VerifierService;
use vaxpass_services::wallet::Wallet;
use vaxpass_services::Result;

pub const ISSUER: &str = "inproc://issuer";
pub const VERIFIER: &str = "inproc://verifier";

static SEQ: AtomicU64 = AtomicU64::new(1);

pub fn record(dose: u32) -> Value {
    json!({
        "full_name": "Alice Example",
        "birth_date": "1984-06-02",
        "pathogen": "SARS-CoV-2",
        "laboratory": "LabX",
        "dose": dose,
        "vaccination_date": "2021-05-20",
        "location": "Valencia"
    })
}

/// Records every delivery before passing it on.
#[derive(Clone, Default)]
pub struct Recorder {
    pub inner: InProcess,
    pub sent: Arc<Mutex<Vec<(String, Inbound)>>>,
}

#[async_trait]
impl Exchange for Recorder {
    async fn send(&self, endpoint: &str, message: &Inbound) -> Result<Vec<Envelope>> {
        self.sent.lock().unwrap().push((endpoint.into(), message.clone()));
        self.inner.send(endpoint, message).await
    }
}

pub struct World {
    pub authority: Identity,
    pub ledger: Arc<LocalLedger>,
    pub genesis: [u8; 32],
    pub issuer: IssuerService,
    pub verifier: VerifierService,
    pub net: Recorder,
    pub wallet: Wallet,
}

pub fn authority_tx(authority: &Identity, kind: TxKind, payload: &impl serde::Serialize) -> Transaction {
    Transaction::sign(kind, payload, authority, SEQ.fetch_add(1, Ordering::Relaxed))
}

pub async fn set_trust(ledger: &dyn LedgerApi, authority: &Identity, did: vaxpass_agent::Did, trusted: bool) {
    ledger
        .submit(authority_tx(authority, TxKind::TrustList, &TrustEntry { did, trusted }))
        .await
        .unwrap();
}

/// An issuer whose DID is registered and trusted and whose definitions
/// are on the ledger.
pub async fn trusted_issuer(
    ledger: Arc<LocalLedger>,
    genesis: [u8; 32],
    authority: &Identity,
    endpoint: &str,
    profile: SecurityProfile,
) -> IssuerService {
    let state = IssuerState::generate(profile, endpoint).unwrap();
    let did = state.identity.did();
    let svc = IssuerService::new(state, ledger.clone(), genesis, None);
    let err = svc.publish().await.unwrap_err();
    assert_eq!(err.code(), "REJECTED_UNAUTHORIZED");
    set_trust(ledger.as_ref(), authority, did, true).await;
    svc.publish().await.unwrap();
    svc
}

impl World {
    pub async fn new(profile: SecurityProfile) -> World {
        let authority = Identity::generate("authority:offline", &mut OsRng);
        let genesis = Genesis::new(&authority, 4, Vec::new(), 1_600_000_000_000);
        let hash = genesis.hash();
        let ledger = Arc::new(LocalLedger::new(Cluster::new(genesis).unwrap()));
        let issuer = trusted_issuer(ledger.clone(), hash, &authority, ISSUER, profile).await;
        let verifier = VerifierService::new(
            Identity::generate(VERIFIER, &mut OsRng),
            ledger.clone(),
            hash,
            Duration::ZERO,
        );
        let net = Recorder::default();
        net.inner.register(ISSUER, Arc::new(issuer.clone()));
        net.inner.register(VERIFIER, Arc::new(verifier.clone()));
        World {
            authority,
            ledger,
            genesis: hash,
            issuer,
            verifier,
            net,
            wallet: Wallet::in_memory(hash, Vec::new()),
        }
    }

    /// Issue `record` into the wallet; returns (issuance id, credential id).
    pub async fn issue(&mut self, record: &Value) -> (String, String) {
        use vaxpass_services::wallet::{Decision, Event};
        let created = self.issuer.create(record).await.unwrap();
        let c = self.wallet.connect(&created.qr, true, &self.net).await.unwrap();
        let [Event::Offer { item }] = c.events[..] else {
            panic!("expected one offer, got {:?}", c.events)
        };
        let events = self
            .wallet
            .respond(item, Decision::Accept, &self.net, self.ledger.as_ref())
            .await
            .unwrap();
        let cred = events
            .iter()
            .find_map(|e| match e {
                Event::Stored { credential } => Some(credential.clone()),
                _ => None,
            })
            .expect("credential stored");
        (created.issuance_id, cred)
    }

    /// Open a proof request and connect the wallet; returns (request id,
    /// pending item).
    pub async fn request(&mut self, template: Value) -> (String, u64) {
        use vaxpass_services::wallet::Event;
        let created = self
            .verifier
            .create(serde_json::from_value(template).unwrap())
            .await
            .unwrap();
        let c = self.wallet.connect(&created.qr, true, &self.net).await.unwrap();
        let [Event::ProofRequest { item }] = c.events[..] else {
            panic!("expected one proof request, got {:?}", c.events)
        };
        (created.request_id, item)
    }
}
