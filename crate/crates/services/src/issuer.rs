//! Issuer (vaccinator) service.
//!
//! `POST /vaccinations` validates a record and returns an invitation; the
//! holder's connection request gets the credential offer in reply, its
//! issuance request gets the signed credential. Registry updates are
//! committed to the ledger before a credential leaves the service.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use async_trait::async_trait;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Mutex;
use vaxpass_agent::{
    CredentialOffer, Envelope, Identity, Inbound, IssueFlow, IssueInput, IssueRole, IssueState, Message, ProblemReport,
};
use vaxpass_anoncreds::{issue_credential, issuer_keygen, CredentialSchema, IssuerKeyPair};
use vaxpass_core::SecurityProfile;
use vaxpass_ledger::{api, LedgerApi, LedgerError, RevRegDef, RevRegEntry, Transaction, TxKind};
use vaxpass_revocation::{AccumulatorState, RegistryDelta, RegistryParams};

use crate::host::AgentHost;
use crate::peer::Inbox;
use crate::record::parse_record;
use crate::{next_sequence, registry_id, write_atomic, Result, ServiceError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssuanceStatus {
    /// Invitation handed out, nobody connected yet.
    Pending,
    Offered,
    Issued,
    /// Holder confirmed storing the credential.
    Accepted,
    Declined,
    Failed,
    Revoked,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issuance {
    pub issuance_id: String,
    pub status: IssuanceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

/// Everything the issuer keeps across restarts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IssuerState {
    pub identity: Identity,
    pub keys: IssuerKeyPair,
    pub schema: CredentialSchema,
    pub registry: AccumulatorState,
    pub rev_reg_id: String,
    pub sequence: u64,
    pub issuances: BTreeMap<String, Issuance>,
}

impl IssuerState {
    pub fn generate(profile: SecurityProfile, endpoint: &str) -> Result<IssuerState> {
        let identity = Identity::generate(endpoint, &mut OsRng);
        let schema = CredentialSchema::vaccination();
        let keys = issuer_keygen(profile, &schema, identity.did().as_str(), &mut OsRng)?;
        let registry = AccumulatorState::with_params(RegistryParams::generate(profile, &mut OsRng)?);
        let rev_reg_id = registry_id(&keys.public().cred_def_id);
        Ok(IssuerState {
            identity,
            keys,
            schema,
            registry,
            rev_reg_id,
            sequence: 0,
            issuances: BTreeMap::new(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<IssuerState> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    pub fn rev_reg_def(&self) -> RevRegDef {
        RevRegDef {
            rev_reg_id: self.rev_reg_id.clone(),
            cred_def_id: self.keys.public().cred_def_id.clone(),
            issuer_did: self.identity.did(),
            params: self.registry.params.clone(),
            value: self.registry.params.base.clone(),
        }
    }

    fn sign<T: Serialize>(&mut self, kind: TxKind, payload: &T) -> Transaction {
        let seq = next_sequence(&mut self.sequence);
        Transaction::sign(kind, payload, &self.identity, seq)
    }
}

/// Work in flight for one issuance. The raw record lives here only until
/// the credential is signed.
struct Pending {
    raw: Option<BTreeMap<String, String>>,
    flow: IssueFlow,
    connection: Option<String>,
}

struct Inner {
    state: IssuerState,
    host: AgentHost,
    pending: HashMap<String, Pending>,
    by_invitation: HashMap<[u8; 16], String>,
    by_connection: HashMap<String, String>,
    published: bool,
}

#[derive(Clone)]
pub struct IssuerService {
    inner: Arc<Mutex<Inner>>,
    ledger: Arc<dyn LedgerApi>,
    genesis: [u8; 32],
    state_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub issuance_id: String,
    /// Invitation QR payload.
    pub qr: String,
}

impl IssuerService {
    pub fn new(
        state: IssuerState,
        ledger: Arc<dyn LedgerApi>,
        genesis: [u8; 32],
        state_path: Option<PathBuf>,
    ) -> IssuerService {
        let host = AgentHost::new(state.identity.clone(), &state.identity.endpoint);
        IssuerService {
            inner: Arc::new(Mutex::new(Inner {
                state,
                host,
                pending: HashMap::new(),
                by_invitation: HashMap::new(),
                by_connection: HashMap::new(),
                published: false,
            })),
            ledger,
            genesis,
            state_path,
        }
    }

    pub async fn did(&self) -> vaxpass_agent::Did {
        self.inner.lock().await.state.identity.did()
    }

    pub async fn cred_def_id(&self) -> String {
        self.inner.lock().await.state.keys.public().cred_def_id.clone()
    }

    /// Publish the DID document, schema, credential definition and
    /// registry definition, skipping whatever is already on the ledger.
    /// The credential definition needs the DID on the trust list.
    pub async fn publish(&self) -> Result<()> {
        let mut inner = self.inner.lock().await;
        self.publish_locked(&mut inner).await
    }

    async fn publish_locked(&self, inner: &mut Inner) -> Result<()> {
        if inner.published {
            return Ok(());
        }
        let st = &mut inner.state;
        let did = st.identity.did();
        let doc = st.identity.document();
        let schema = st.schema.clone();
        let def = st.keys.public().clone();
        let rev = st.rev_reg_def();
        self.ensure(st, TxKind::DidDoc, did.as_str(), &doc).await?;
        self.ensure(st, TxKind::Schema, &schema.schema_id, &schema).await?;
        self.ensure(st, TxKind::CredDef, &def.cred_def_id, &def).await?;
        self.ensure(st, TxKind::RevRegDef, &rev.rev_reg_id, &rev).await?;
        inner.published = true;
        self.persist(&inner.state)?;
        Ok(())
    }

    async fn ensure<T: Serialize>(&self, st: &mut IssuerState, kind: TxKind, key: &str, payload: &T) -> Result<()> {
        match api::fetch::<Value>(self.ledger.as_ref(), &self.genesis, api::query(kind, key)).await {
            Ok((existing, _)) => {
                let ours = serde_json::to_value(payload).expect("payload serializes");
                if existing != ours && kind != TxKind::Schema {
                    return Err(ServiceError::Config(format!(
                        "{} {key} on the ledger differs from local state",
                        kind.as_str()
                    )));
                }
                Ok(())
            }
            Err(LedgerError::NotFound(_)) => {
                let tx = st.sign(kind, payload);
                self.ledger.submit(tx).await?;
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn persist(&self, state: &IssuerState) -> Result<()> {
        if let Some(path) = &self.state_path {
            write_atomic(path, &serde_json::to_vec_pretty(state).expect("state serializes"))?;
        }
        Ok(())
    }

    /// Validate `record` and open an issuance.
    pub async fn create(&self, record: &Value) -> Result<Created> {
        let mut inner = self.inner.lock().await;
        let raw = parse_record(&inner.state.schema, record)?;
        self.ledger.health().await?;
        self.publish_locked(&mut inner).await?;
        let invitation = inner.host.invite();
        let issuance_id = hex::encode(&invitation.nonce[..8]);
        inner.by_invitation.insert(invitation.nonce, issuance_id.clone());
        inner.pending.insert(
            issuance_id.clone(),
            Pending {
                raw: Some(raw),
                flow: IssueFlow::new(IssueRole::Issuer),
                connection: None,
            },
        );
        inner.state.issuances.insert(
            issuance_id.clone(),
            Issuance {
                issuance_id: issuance_id.clone(),
                status: IssuanceStatus::Pending,
                serial: None,
                code: None,
            },
        );
        Ok(Created {
            issuance_id,
            qr: invitation.to_qr(),
        })
    }

    pub async fn status(&self, id: &str) -> Result<Issuance> {
        let inner = self.inner.lock().await;
        inner
            .state
            .issuances
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("issuance {id}")))
    }

    /// Remove an issued credential's handle from the registry.
    pub async fn revoke(&self, id: &str) -> Result<Issuance> {
        let mut inner = self.inner.lock().await;
        let record = inner
            .state
            .issuances
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("issuance {id}")))?;
        let serial = match (&record.serial, record.status) {
            (Some(s), IssuanceStatus::Issued | IssuanceStatus::Accepted) => s.clone(),
            _ => {
                return Err(ServiceError::Protocol {
                    code: "NOT_REVOCABLE".into(),
                    reason: format!("issuance {id} is {:?}", record.status),
                })
            }
        };
        let mut registry = inner.state.registry.clone();
        let delta = registry.revoke(&serial)?;
        self.commit_delta(&mut inner.state, registry, delta).await?;
        let rec = inner.state.issuances.get_mut(id).expect("present");
        rec.status = IssuanceStatus::Revoked;
        let rec = rec.clone();
        self.persist(&inner.state)?;
        Ok(rec)
    }

    async fn commit_delta(&self, st: &mut IssuerState, registry: AccumulatorState, delta: RegistryDelta) -> Result<()> {
        let entry = RevRegEntry {
            rev_reg_id: st.rev_reg_id.clone(),
            delta,
        };
        let tx = st.sign(TxKind::RevRegEntry, &entry);
        self.ledger.submit(tx).await?;
        st.registry = registry;
        Ok(())
    }

    async fn handle(&self, inbound: Inbound) -> Result<Vec<Envelope>> {
        let mut guard = self.inner.lock().await;
        let inner = &mut *guard;
        match inbound {
            Inbound::Connect(req) => {
                let conn = inner.host.accept(&req)?;
                let Some(id) = inner.by_invitation.remove(&req.invitation_nonce) else {
                    return Ok(Vec::new());
                };
                inner.by_connection.insert(conn.clone(), id.clone());
                let mut nonce = [0u8; 32];
                OsRng.fill_bytes(&mut nonce);
                let p = inner.pending.get_mut(&id).expect("pending issuance");
                p.connection = Some(conn.clone());
                let offer = CredentialOffer {
                    cred_def_id: inner.state.keys.public().cred_def_id.clone(),
                    schema_id: inner.state.schema.schema_id.clone(),
                    nonce,
                    preview: p.raw.clone().unwrap_or_default(),
                };
                let out = self.step(inner, &id, IssueInput::Offer(offer));
                Ok(inner.host.seal(&conn, &out))
            }
            Inbound::Envelope(env) => {
                let (conn, msg) = inner.host.open(&env)?;
                let Some(id) = inner.by_connection.get(&conn).cloned() else {
                    return Ok(Vec::new());
                };
                let mut out = self.step(inner, &id, IssueInput::Receive(msg));
                let requested = match &inner.pending.get(&id).map(|p| &p.flow.state) {
                    Some(IssueState::Requested { offer, request }) => Some((offer.clone(), request.clone())),
                    _ => None,
                };
                if let Some((offer, request)) = requested {
                    let input = match self.sign_credential(inner, &id, &offer, &request).await {
                        Ok(partial) => IssueInput::Issue(Box::new(partial)),
                        Err(e) => IssueInput::Abort(ProblemReport::new(e.code(), e.to_string())),
                    };
                    out.extend(self.step(inner, &id, input));
                }
                self.persist(&inner.state)?;
                Ok(inner.host.seal(&conn, &out))
            }
        }
    }

    async fn sign_credential(
        &self,
        inner: &mut Inner,
        id: &str,
        offer: &CredentialOffer,
        request: &vaxpass_anoncreds::IssuanceRequest,
    ) -> Result<vaxpass_anoncreds::PartialCredential> {
        let raw = inner
            .pending
            .get(id)
            .and_then(|p| p.raw.clone())
            .ok_or_else(|| ServiceError::NotFound(format!("record for issuance {id}")))?;
        let mut serial = [0u8; 16];
        OsRng.fill_bytes(&mut serial);
        let serial = hex::encode(serial);
        let st = &mut inner.state;
        let mut registry = st.registry.clone();
        let (partial, delta) = issue_credential(
            &st.keys,
            &st.schema,
            &mut registry,
            &raw,
            request,
            &offer.nonce,
            &serial,
            &mut OsRng,
        )?;
        self.commit_delta(st, registry, delta).await?;
        if let Some(p) = inner.pending.get_mut(id) {
            p.raw = None;
        }
        if let Some(rec) = inner.state.issuances.get_mut(id) {
            rec.serial = Some(serial);
        }
        Ok(partial)
    }

    fn step(&self, inner: &mut Inner, id: &str, input: IssueInput) -> Vec<Message> {
        let Some(p) = inner.pending.get_mut(id) else {
            return Vec::new();
        };
        let (flow, out) = p.flow.step(input);
        p.flow = flow;
        let (status, code) = match &p.flow.state {
            IssueState::Start => (IssuanceStatus::Pending, None),
            IssueState::Offered { .. } | IssueState::Requested { .. } => (IssuanceStatus::Offered, None),
            IssueState::Issued { .. } => (IssuanceStatus::Issued, None),
            IssueState::Acked => (IssuanceStatus::Accepted, None),
            IssueState::Declined { code } => (IssuanceStatus::Declined, Some(code.clone())),
            IssueState::Failed { code } => (IssuanceStatus::Failed, Some(code.clone())),
        };
        if p.flow.state.is_terminal() {
            p.raw = None;
            inner.pending.remove(id);
        }
        if let Some(rec) = inner.state.issuances.get_mut(id) {
            rec.status = status;
            rec.code = code;
        }
        out
    }

    pub fn router(&self) -> Router {
        let r = Router::new()
            .route("/vaccinations", post(create_h))
            .route("/vaccinations/{id}", get(status_h))
            .route("/vaccinations/{id}/revoke", post(revoke_h))
            .route("/didcomm", post(didcomm_h::<IssuerService>))
            .route("/health", get(health_h))
            .with_state(self.clone());
        crate::finish_router(r)
    }
}

#[async_trait]
impl Inbox for IssuerService {
    async fn receive(&self, bytes: Vec<u8>) -> Result<Vec<Envelope>> {
        let inbound = Inbound::from_bytes(&bytes)?;
        self.handle(inbound).await
    }
}

async fn create_h(State(s): State<IssuerService>, body: axum::body::Bytes) -> Result<(StatusCode, Json<Created>)> {
    let record: Value =
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadFormat(format!("body is not JSON: {e}")))?;
    Ok((StatusCode::CREATED, Json(s.create(&record).await?)))
}

async fn status_h(State(s): State<IssuerService>, Path(id): Path<String>) -> Result<Json<Issuance>> {
    Ok(Json(s.status(&id).await?))
}

async fn revoke_h(State(s): State<IssuerService>, Path(id): Path<String>) -> Result<Json<Issuance>> {
    Ok(Json(s.revoke(&id).await?))
}

pub(crate) async fn didcomm_h<S: Inbox + Clone + 'static>(State(s): State<S>, body: axum::body::Bytes) -> Result<Json<Vec<Envelope>>> {
    Ok(Json(s.receive(body.to_vec()).await?))
}

async fn health_h(State(s): State<IssuerService>) -> Result<Json<Value>> {
    let h = s.ledger.health().await?;
    let inner = s.inner.lock().await;
    Ok(Json(serde_json::json!({
        "did": inner.state.identity.did(),
        "cred_def_id": inner.state.keys.public().cred_def_id,
        "published": inner.published,
        "ledger_height": h.height,
    })))
}
