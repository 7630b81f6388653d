//! Holder wallet: connections, credentials and pending items, persisted in
//! an encrypted file. Every operation that talks to a peer delivers
//! through an [`Exchange`] and processes the replies it gets back.

pub mod bridge;
pub mod store;

use std::collections::BTreeMap;
use std::path::Path;

use rand::rngs::OsRng;
use serde::{Deserialize, Serialize};
use vaxpass_agent::{
    accept_invitation, Connection, CredentialOffer, Did, Envelope, Identity, Inbound, Invitation, IssueFlow,
    IssueInput, IssueRole, IssueState, Message, NonceLog, PresentFlow, PresentInput, PresentRole, PresentState,
    ProblemReport,
};
use vaxpass_anoncreds::{
    build_presentation, complete_credential, request_issuance, AnonCredsError, Credential, CredentialDefinition,
    CredentialSchema, HolderBlinding, LinkSecret, Presentation, PresentationRequest,
};
use vaxpass_ledger::{api, LedgerApi};
use vaxpass_revocation::{witness_update, PublicAccumulator, RevocationError};

use crate::peer::Exchange;
use crate::{registry_id, Result, ServiceError};
use store::{KdfParams, LockedFile};

/// Holders have no endpoint of their own; replies come back on the
/// response to each delivery.
pub const RETURN_ROUTE: &str = "didcomm:return-route";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeerConnection {
    pub connection: Connection,
    pub endpoint: String,
    pub peer: Did,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredCredential {
    pub credential: Credential,
    pub definition: CredentialDefinition,
    pub schema: CredentialSchema,
    pub rev_reg_id: String,
    pub revoked: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PendingKind {
    Offer {
        flow: IssueFlow,
        #[serde(default)]
        accepted: Option<Box<Accepted>>,
    },
    ProofRequest {
        flow: PresentFlow,
    },
}

/// What the holder needs to finish an accepted offer.
#[derive(Clone, Serialize, Deserialize)]
pub struct Accepted {
    pub blinding: HolderBlinding,
    pub definition: CredentialDefinition,
    pub schema: CredentialSchema,
}

impl std::fmt::Debug for Accepted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Accepted")
            .field("cred_def_id", &self.definition.cred_def_id)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PendingItem {
    pub id: u64,
    pub connection_id: String,
    #[serde(flatten)]
    pub kind: PendingKind,
}

impl PendingItem {
    fn is_done(&self) -> bool {
        match &self.kind {
            PendingKind::Offer { flow, .. } => flow.state.is_terminal(),
            PendingKind::ProofRequest { flow } => flow.state.is_terminal(),
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
pub struct WalletData {
    pub identity: Identity,
    pub link_secret: LinkSecret,
    #[serde(with = "hex::serde")]
    pub genesis: [u8; 32],
    pub ledger: Vec<String>,
    pub nonce_log: NonceLog,
    pub connections: BTreeMap<String, PeerConnection>,
    pub credentials: BTreeMap<String, StoredCredential>,
    pub pending: BTreeMap<u64, PendingItem>,
    pub next_item: u64,
}

/// Something that happened while processing a delivery.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Offer { item: u64 },
    ProofRequest { item: u64 },
    Stored { credential: String },
    Presented { item: u64 },
    Verified { item: u64, revealed: BTreeMap<String, String> },
    Declined { item: u64, code: String },
    Failed { item: u64, code: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionSummary {
    pub connection_id: String,
    pub peer: Did,
    pub endpoint: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connected {
    pub connection: ConnectionSummary,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialSummary {
    pub id: String,
    pub cred_def_id: String,
    pub issuer_did: String,
    pub values: BTreeMap<String, String>,
    pub epoch: u64,
    pub revoked: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PendingDetail {
    Offer { offer: CredentialOffer },
    ProofRequest { request: PresentationRequest },
    InProgress { state: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingSummary {
    pub id: u64,
    pub connection_id: String,
    pub peer: Option<Did>,
    #[serde(flatten)]
    pub detail: PendingDetail,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncReport {
    pub updated: Vec<String>,
    pub revoked: Vec<String>,
    pub unchanged: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Decline,
}

pub struct Wallet {
    pub data: WalletData,
    file: Option<LockedFile>,
    passphrase: Vec<u8>,
    kdf: KdfParams,
}

impl Wallet {
    /// Fresh wallet without a backing file.
    pub fn in_memory(genesis: [u8; 32], ledger: Vec<String>) -> Wallet {
        Wallet {
            data: WalletData {
                identity: Identity::generate(RETURN_ROUTE, &mut OsRng),
                link_secret: LinkSecret::generate(&mut OsRng),
                genesis,
                ledger,
                nonce_log: NonceLog::default(),
                connections: BTreeMap::new(),
                credentials: BTreeMap::new(),
                pending: BTreeMap::new(),
                next_item: 1,
            },
            file: None,
            passphrase: Vec::new(),
            kdf: KdfParams::default(),
        }
    }

    pub fn create(path: &Path, passphrase: &str, genesis: [u8; 32], ledger: Vec<String>, kdf: KdfParams) -> Result<Wallet> {
        let file = LockedFile::acquire(path)?;
        if path.exists() {
            return Err(ServiceError::Io(format!("{} already exists", path.display())));
        }
        let mut w = Wallet::in_memory(genesis, ledger);
        w.file = Some(file);
        w.passphrase = passphrase.as_bytes().to_vec();
        w.kdf = kdf;
        w.save()?;
        Ok(w)
    }

    /// Decrypt and check every stored credential against its definition.
    pub fn open(path: &Path, passphrase: &str) -> Result<Wallet> {
        let file = LockedFile::acquire(path)?;
        let sealed = file.read()?;
        let (plain, kdf) = store::open(&sealed, passphrase.as_bytes())?;
        let data: WalletData =
            serde_json::from_slice(&plain).map_err(|e| ServiceError::CorruptStore(format!("wallet contents: {e}")))?;
        if let Some((id, _)) = data.credentials.iter().find(|(_, c)| !c.credential.verify(&c.definition)) {
            return Err(ServiceError::CorruptStore(format!("credential {id} fails verification")));
        }
        Ok(Wallet {
            data,
            file: Some(file),
            passphrase: passphrase.as_bytes().to_vec(),
            kdf,
        })
    }

    pub fn save(&self) -> Result<()> {
        if let Some(file) = &self.file {
            let plain = serde_json::to_vec(&self.data).expect("wallet serializes");
            file.write(&store::seal(&plain, &self.passphrase, self.kdf)?)?;
        }
        Ok(())
    }

    pub fn did(&self) -> Did {
        self.data.identity.did()
    }

    pub fn connections(&self) -> Vec<ConnectionSummary> {
        self.data.connections.values().map(summary).collect()
    }

    pub fn list(&self) -> Vec<CredentialSummary> {
        self.data
            .credentials
            .iter()
            .map(|(id, c)| CredentialSummary {
                id: id.clone(),
                cred_def_id: c.credential.cred_def_id.clone(),
                issuer_did: c.definition.issuer_did.clone(),
                values: c.credential.raw.clone(),
                epoch: c.credential.witness.epoch,
                revoked: c.revoked,
            })
            .collect()
    }

    pub fn pending(&self) -> Vec<PendingSummary> {
        self.data
            .pending
            .values()
            .map(|p| PendingSummary {
                id: p.id,
                connection_id: p.connection_id.clone(),
                peer: self.data.connections.get(&p.connection_id).map(|c| c.peer.clone()),
                detail: match &p.kind {
                    PendingKind::Offer { flow, .. } => match &flow.state {
                        IssueState::Offered { offer } => PendingDetail::Offer { offer: offer.clone() },
                        s => PendingDetail::InProgress { state: s.name().into() },
                    },
                    PendingKind::ProofRequest { flow } => match &flow.state {
                        PresentState::Requested { request } => PendingDetail::ProofRequest {
                            request: request.clone(),
                        },
                        s => PendingDetail::InProgress { state: s.name().into() },
                    },
                },
            })
            .collect()
    }

    /// Credentials in plain JSON, for backup or inspection.
    pub fn export(&self) -> serde_json::Value {
        serde_json::json!({
            "did": self.did(),
            "credentials": self.data.credentials,
        })
    }

    /// Answer an invitation. Without consent this fails with `DECLINED`
    /// and changes nothing.
    pub async fn connect(&mut self, payload: &str, consent: bool, ex: &dyn Exchange) -> Result<Connected> {
        let invitation = Invitation::from_qr(payload.trim())?;
        let mut log = self.data.nonce_log.clone();
        let (connection, request) = accept_invitation(&invitation, &self.data.identity, consent, &mut log, &mut OsRng)?;
        let replies = ex.send(&invitation.endpoint, &Inbound::Connect(request)).await?;
        self.data.nonce_log = log;
        let peer = PeerConnection {
            connection,
            endpoint: invitation.endpoint.clone(),
            peer: invitation.inviter.id.clone(),
        };
        let summary = summary(&peer);
        self.data.connections.insert(summary.connection_id.clone(), peer);
        let mut events = Vec::new();
        let result = self.pump(replies, Vec::new(), ex, &mut events).await;
        self.save()?;
        result?;
        Ok(Connected {
            connection: summary,
            events,
        })
    }

    /// Accept or decline a pending offer or proof request.
    pub async fn respond(
        &mut self,
        item: u64,
        decision: Decision,
        ex: &dyn Exchange,
        ledger: &dyn LedgerApi,
    ) -> Result<Vec<Event>> {
        let p = self
            .data
            .pending
            .get(&item)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownItem(item.to_string()))?;
        let mut events = Vec::new();
        let mut unsatisfiable = None;
        let outbox = match (&p.kind, decision) {
            (PendingKind::Offer { flow, .. }, Decision::Accept) => {
                let IssueState::Offered { offer } = &flow.state else {
                    return Err(ServiceError::UnknownItem(format!("{item} is not awaiting a decision")));
                };
                let definition = api::cred_def(ledger, &self.data.genesis, &offer.cred_def_id).await?;
                let schema = api::schema(ledger, &self.data.genesis, &offer.schema_id).await?;
                if definition.schema_id != schema.schema_id {
                    return Err(AnonCredsError::InvalidSchema("offer schema does not match the definition".into()).into());
                }
                let (blinding, request) =
                    request_issuance(&self.data.link_secret, &definition, &offer.nonce, &mut OsRng)?;
                let accepted = Accepted {
                    blinding,
                    definition,
                    schema,
                };
                self.step_issue(item, IssueInput::Accept(request), Some(accepted))
            }
            (PendingKind::Offer { .. }, Decision::Decline) => self.step_issue(item, IssueInput::Decline, None),
            (PendingKind::ProofRequest { flow }, Decision::Accept) => {
                let PresentState::Requested { request } = &flow.state else {
                    return Err(ServiceError::UnknownItem(format!("{item} is not awaiting a decision")));
                };
                match self.presentation_for(request, ledger).await? {
                    Ok(pres) => {
                        events.push(Event::Presented { item });
                        self.step_present(item, PresentInput::Present(Box::new(pres)))
                    }
                    Err(why) => {
                        let report = ProblemReport::new("CANNOT_SATISFY", why.clone());
                        unsatisfiable = Some(why);
                        self.step_present(item, PresentInput::Decline(report))
                    }
                }
            }
            (PendingKind::ProofRequest { .. }, Decision::Decline) => self.step_present(
                item,
                PresentInput::Decline(ProblemReport::new("DECLINED", "holder declined the request")),
            ),
        };
        let result = self.pump(Vec::new(), outbox, ex, &mut events).await;
        self.finish(item, &mut events);
        self.save()?;
        result?;
        match unsatisfiable {
            Some(why) => Err(ServiceError::CannotSatisfy(why)),
            None => Ok(events),
        }
    }

    /// Send `presentation` for a pending proof request as is. Lets callers
    /// present something the wallet would not build itself.
    pub async fn respond_with(&mut self, item: u64, presentation: Presentation, ex: &dyn Exchange) -> Result<Vec<Event>> {
        if !matches!(
            self.data.pending.get(&item).map(|p| &p.kind),
            Some(PendingKind::ProofRequest { .. })
        ) {
            return Err(ServiceError::UnknownItem(item.to_string()));
        }
        let mut events = vec![Event::Presented { item }];
        let outbox = self.step_present(item, PresentInput::Present(Box::new(presentation)));
        let result = self.pump(Vec::new(), outbox, ex, &mut events).await;
        self.finish(item, &mut events);
        self.save()?;
        result.map(|_| events)
    }

    /// Bring every live credential's witness up to the latest registry
    /// epoch. Revoked credentials are flagged, not removed.
    pub async fn sync(&mut self, ledger: &dyn LedgerApi) -> Result<SyncReport> {
        let mut report = SyncReport::default();
        let ids: Vec<String> = self.data.credentials.keys().cloned().collect();
        for id in ids {
            if self.data.credentials[&id].revoked {
                continue;
            }
            match self.sync_one(&id, ledger).await? {
                SyncOutcome::Updated => report.updated.push(id),
                SyncOutcome::Revoked => report.revoked.push(id),
                SyncOutcome::Unchanged => report.unchanged.push(id),
            }
        }
        self.save()?;
        Ok(report)
    }

    /// Build a presentation from credential `id` against `acc` without
    /// touching its witness.
    pub fn present(&self, id: &str, request: &PresentationRequest, acc: &PublicAccumulator) -> Result<Presentation> {
        let c = self
            .data
            .credentials
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("credential {id}")))?;
        Ok(build_presentation(
            &c.credential,
            &c.schema,
            &c.definition,
            request,
            acc,
            &mut OsRng,
        )?)
    }

    async fn sync_one(&mut self, id: &str, ledger: &dyn LedgerApi) -> Result<SyncOutcome> {
        let c = &self.data.credentials[id];
        let deltas = ledger.deltas(&c.rev_reg_id, c.credential.witness.epoch).await?;
        if deltas.is_empty() {
            return Ok(SyncOutcome::Unchanged);
        }
        let acc = api::accumulator(ledger, &self.data.genesis, &c.rev_reg_id, None).await?;
        let c = self.data.credentials.get_mut(id).expect("present");
        match witness_update(&c.credential.witness, &deltas, &acc.params) {
            Ok(w) => {
                if !w.verifies(&acc) {
                    return Err(RevocationError::StaleWitness.into());
                }
                c.credential.witness = w;
                Ok(SyncOutcome::Updated)
            }
            Err(RevocationError::Revoked) => {
                c.revoked = true;
                Ok(SyncOutcome::Revoked)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// First credential that can answer `request`, with its witness
    /// brought current. The inner error explains why none can.
    async fn presentation_for(
        &mut self,
        request: &PresentationRequest,
        ledger: &dyn LedgerApi,
    ) -> Result<std::result::Result<Presentation, String>> {
        let ids: Vec<String> = self
            .data
            .credentials
            .iter()
            .filter(|(_, c)| c.credential.schema_id == request.schema_id && !c.revoked)
            .map(|(id, _)| id.clone())
            .collect();
        let mut why = "no credential for the requested schema".to_string();
        for id in ids {
            if let SyncOutcome::Revoked = self.sync_one(&id, ledger).await? {
                why = "credential has been revoked".into();
                continue;
            }
            let c = &self.data.credentials[&id];
            let acc = api::accumulator(ledger, &self.data.genesis, &c.rev_reg_id, None).await?;
            match self.present(&id, request, &acc) {
                Ok(p) => return Ok(Ok(p)),
                Err(ServiceError::Credential(AnonCredsError::CannotSatisfy(m))) => why = m,
                Err(e) => return Err(e),
            }
        }
        Ok(Err(why))
    }

    fn step_issue(&mut self, item: u64, input: IssueInput, accepted: Option<Accepted>) -> Vec<(String, Message)> {
        let Some(p) = self.data.pending.get_mut(&item) else {
            return Vec::new();
        };
        let PendingKind::Offer { flow, accepted: slot } = &mut p.kind else {
            return Vec::new();
        };
        let (next, out) = flow.step(input);
        *flow = next;
        if let Some(a) = accepted {
            *slot = Some(Box::new(a));
        }
        out.into_iter().map(|m| (p.connection_id.clone(), m)).collect()
    }

    fn step_present(&mut self, item: u64, input: PresentInput) -> Vec<(String, Message)> {
        let Some(p) = self.data.pending.get_mut(&item) else {
            return Vec::new();
        };
        let PendingKind::ProofRequest { flow } = &mut p.kind else {
            return Vec::new();
        };
        let (next, out) = flow.step(input);
        *flow = next;
        out.into_iter().map(|m| (p.connection_id.clone(), m)).collect()
    }

    /// Drop `item` once its flow is over, recording how it ended.
    fn finish(&mut self, item: u64, events: &mut Vec<Event>) {
        let Some(p) = self.data.pending.get(&item) else { return };
        if !p.is_done() {
            return;
        }
        let ev = match &p.kind {
            PendingKind::Offer { flow, .. } => match &flow.state {
                IssueState::Declined { code } => Some(Event::Declined { item, code: code.clone() }),
                IssueState::Failed { code } => Some(Event::Failed { item, code: code.clone() }),
                _ => None,
            },
            PendingKind::ProofRequest { flow } => match &flow.state {
                PresentState::Verified { revealed } => Some(Event::Verified {
                    item,
                    revealed: revealed.clone(),
                }),
                PresentState::Declined { code } => Some(Event::Declined { item, code: code.clone() }),
                PresentState::Failed { code } => Some(Event::Failed { item, code: code.clone() }),
                _ => None,
            },
        };
        events.extend(ev);
        self.data.pending.remove(&item);
    }

    /// Deliver `outbox`, process `inbox` and every reply until both are
    /// empty.
    async fn pump(
        &mut self,
        mut inbox: Vec<Envelope>,
        mut outbox: Vec<(String, Message)>,
        ex: &dyn Exchange,
        events: &mut Vec<Event>,
    ) -> Result<()> {
        loop {
            for env in std::mem::take(&mut inbox) {
                self.accept_envelope(&env, &mut outbox, events)?;
            }
            if outbox.is_empty() {
                return Ok(());
            }
            for (conn_id, msg) in std::mem::take(&mut outbox) {
                let peer = self
                    .data
                    .connections
                    .get_mut(&conn_id)
                    .ok_or_else(|| vaxpass_agent::AgentError::UnknownConnection(conn_id.clone()))?;
                let env = peer.connection.pack_json(&msg, &mut OsRng);
                let endpoint = peer.endpoint.clone();
                inbox.extend(ex.send(&endpoint, &Inbound::Envelope(env)).await?);
            }
        }
    }

    fn accept_envelope(&mut self, env: &Envelope, outbox: &mut Vec<(String, Message)>, events: &mut Vec<Event>) -> Result<()> {
        let conn_id = env.connection_id.clone();
        let peer = self
            .data
            .connections
            .get_mut(&conn_id)
            .ok_or_else(|| vaxpass_agent::AgentError::UnknownConnection(conn_id.clone()))?;
        let msg: Message = peer.connection.unpack_json(env)?;
        match msg {
            Message::Offer(_) | Message::ProofRequest(_) => {
                let id = self.data.next_item;
                self.data.next_item += 1;
                let offer = matches!(msg, Message::Offer(_));
                let kind = if offer {
                    let (flow, _) = IssueFlow::new(IssueRole::Holder).step(IssueInput::Receive(msg));
                    PendingKind::Offer { flow, accepted: None }
                } else {
                    let (flow, _) = PresentFlow::new(PresentRole::Holder).step(PresentInput::Receive(msg));
                    PendingKind::ProofRequest { flow }
                };
                self.data.pending.insert(
                    id,
                    PendingItem {
                        id,
                        connection_id: conn_id,
                        kind,
                    },
                );
                events.push(if offer { Event::Offer { item: id } } else { Event::ProofRequest { item: id } });
            }
            msg => {
                let Some(item) = self
                    .data
                    .pending
                    .values()
                    .find(|p| p.connection_id == conn_id && !p.is_done())
                    .map(|p| p.id)
                else {
                    return Ok(());
                };
                let is_offer = matches!(self.data.pending[&item].kind, PendingKind::Offer { .. });
                if is_offer {
                    outbox.extend(self.step_issue(item, IssueInput::Receive(msg), None));
                    outbox.extend(self.store_issued(item, events));
                } else {
                    outbox.extend(self.step_present(item, PresentInput::Receive(msg)));
                }
                self.finish(item, events);
            }
        }
        Ok(())
    }

    /// Complete and keep a credential that just arrived for `item`.
    fn store_issued(&mut self, item: u64, events: &mut Vec<Event>) -> Vec<(String, Message)> {
        let p = &self.data.pending[&item];
        let PendingKind::Offer { flow, accepted } = &p.kind else {
            return Vec::new();
        };
        let (IssueState::Issued { credential }, Some(acc)) = (&flow.state, accepted) else {
            return Vec::new();
        };
        let completed = complete_credential(
            (**credential).clone(),
            &acc.blinding,
            &self.data.link_secret,
            &acc.schema,
            &acc.definition,
        );
        match completed {
            Ok(cred) => {
                let id = cred.serial.clone();
                let stored = StoredCredential {
                    rev_reg_id: registry_id(&cred.cred_def_id),
                    credential: cred,
                    definition: acc.definition.clone(),
                    schema: acc.schema.clone(),
                    revoked: false,
                };
                self.data.credentials.insert(id.clone(), stored);
                events.push(Event::Stored { credential: id });
                self.step_issue(item, IssueInput::Stored, None)
            }
            Err(e) => self.step_issue(item, IssueInput::Abort(ProblemReport::new(e.code(), e.to_string())), None),
        }
    }
}

enum SyncOutcome {
    Updated,
    Revoked,
    Unchanged,
}

fn summary(p: &PeerConnection) -> ConnectionSummary {
    ConnectionSummary {
        connection_id: p.connection.id.clone(),
        peer: p.peer.clone(),
        endpoint: p.endpoint.clone(),
    }
}
