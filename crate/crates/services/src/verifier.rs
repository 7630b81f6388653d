//! Verifier service.
//!
//! `POST /proof-requests` turns a template into a presentation request and
//! an invitation. The holder connects, receives the request in the reply,
//! and later delivers a presentation, which is checked against the ledger
//! (credential definition, current accumulator, trust list). Only the
//! revealed values and the outcome are kept.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::rngs::OsRng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Mutex;
use vaxpass_agent::{
    Envelope, Identity, Inbound, Message, PresentFlow, PresentInput, PresentRole, PresentState, ProblemReport,
};
use vaxpass_anoncreds::{
    verify_presentation, AllowedValues, CredentialSchema, Direction, Presentation, PresentationRequest, Verdict,
};
use vaxpass_ledger::{api, LedgerApi};

use crate::host::AgentHost;
use crate::peer::Inbox;
use crate::trust::TrustCache;
use crate::{registry_id, Result, ServiceError};

pub const EXPIRED_REQUEST: &str = "EXPIRED_REQUEST";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatePredicate {
    pub attribute: String,
    /// `>=` or `<=`.
    pub op: String,
    /// Integer, or a `YYYY-MM-DD` date for date claims.
    pub bound: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofTemplate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_id: Option<String>,
    #[serde(default)]
    pub revealed: Vec<String>,
    #[serde(default)]
    pub predicates: Vec<TemplatePredicate>,
    #[serde(default)]
    pub allowed: Vec<AllowedValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freshness_secs: Option<u64>,
}

impl ProofTemplate {
    /// Build a request with a fresh nonce. Fails with `BAD_TEMPLATE`.
    pub fn to_request(&self, request_id: &str, schema: &CredentialSchema) -> Result<PresentationRequest> {
        let bad = |m: String| ServiceError::BadTemplate(m);
        if let Some(id) = &self.schema_id {
            if *id != schema.schema_id {
                return Err(bad(format!("unknown schema {id}")));
            }
        }
        if self.revealed.is_empty() && self.predicates.is_empty() && self.allowed.is_empty() {
            return Err(bad("template has no constraints".into()));
        }
        let mut req = PresentationRequest::new(request_id, &schema.schema_id, &mut OsRng);
        if let Some(f) = self.freshness_secs {
            req.freshness_secs = f;
        }
        for a in &self.revealed {
            req = req.reveal(a);
        }
        for p in &self.predicates {
            let op = match p.op.as_str() {
                ">=" | "ge" => Direction::AtLeast,
                "<=" | "le" => Direction::AtMost,
                other => return Err(bad(format!("unknown operator {other:?}"))),
            };
            let bound = match &p.bound {
                Value::Number(n) => n.as_i64().ok_or_else(|| bad(format!("bound {n} is not an integer")))?,
                Value::String(s) if s.parse::<i64>().is_ok() => s.parse().unwrap(),
                Value::String(s) => {
                    let encoded = schema
                        .encode(&p.attribute, s)
                        .map_err(|e| bad(format!("bound for {}: {e}", p.attribute)))?;
                    i64::try_from(&encoded).map_err(|_| bad(format!("bound for {} is not ordered", p.attribute)))?
                }
                other => return Err(bad(format!("bound {other} is not a number or date"))),
            };
            req = req.predicate(&p.attribute, op, bound);
        }
        req.allowed = self.allowed.clone();
        req.validate(schema).map_err(|e| bad(e.to_string()))?;
        Ok(req)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofStatus {
    Pending,
    Verified,
    Declined,
    Failed,
}

/// Public view of a request, as served by `GET /proof-requests/{id}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusView {
    pub request_id: String,
    pub status: ProofStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed: Option<BTreeMap<String, String>>,
}

/// What the verifier stores per request.
#[derive(Clone, Debug, Serialize)]
pub struct RequestRecord {
    pub template: ProofTemplate,
    pub request: PresentationRequest,
    pub flow: PresentFlow,
    #[serde(skip)]
    created: Instant,
    pub connection: Option<String>,
}

impl RequestRecord {
    fn view(&self) -> StatusView {
        let (status, reason, revealed) = match &self.flow.state {
            PresentState::Verified { revealed } => (ProofStatus::Verified, None, Some(revealed.clone())),
            PresentState::Declined { code } => (ProofStatus::Declined, Some(code.clone()), None),
            PresentState::Failed { code } => (ProofStatus::Failed, Some(code.clone()), None),
            _ => (ProofStatus::Pending, None, None),
        };
        StatusView {
            request_id: self.request.request_id.clone(),
            status,
            reason,
            revealed,
        }
    }
}

struct Inner {
    host: AgentHost,
    records: HashMap<String, RequestRecord>,
    by_invitation: HashMap<[u8; 16], String>,
    by_connection: HashMap<String, String>,
    trust: TrustCache,
}

#[derive(Clone)]
pub struct VerifierService {
    inner: Arc<Mutex<Inner>>,
    ledger: Arc<dyn LedgerApi>,
    genesis: [u8; 32],
    schema: CredentialSchema,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub request_id: String,
    pub qr: String,
}

impl VerifierService {
    pub fn new(identity: Identity, ledger: Arc<dyn LedgerApi>, genesis: [u8; 32], trust_freshness: Duration) -> Self {
        let host = AgentHost::new(identity.clone(), &identity.endpoint);
        VerifierService {
            inner: Arc::new(Mutex::new(Inner {
                host,
                records: HashMap::new(),
                by_invitation: HashMap::new(),
                by_connection: HashMap::new(),
                trust: TrustCache::new(genesis, trust_freshness),
            })),
            ledger,
            genesis,
            schema: CredentialSchema::vaccination(),
        }
    }

    pub async fn create(&self, template: ProofTemplate) -> Result<Created> {
        let mut inner = self.inner.lock().await;
        let invitation = inner.host.invite();
        let request_id = hex::encode(&invitation.nonce[..8]);
        let request = template.to_request(&request_id, &self.schema)?;
        inner.by_invitation.insert(invitation.nonce, request_id.clone());
        let flow = PresentFlow::new(PresentRole::Verifier);
        inner.records.insert(
            request_id.clone(),
            RequestRecord {
                template,
                request,
                flow,
                created: Instant::now(),
                connection: None,
            },
        );
        Ok(Created {
            request_id,
            qr: invitation.to_qr(),
        })
    }

    pub async fn status(&self, id: &str) -> Result<StatusView> {
        let inner = self.inner.lock().await;
        inner
            .records
            .get(id)
            .map(RequestRecord::view)
            .ok_or_else(|| ServiceError::NotFound(format!("proof request {id}")))
    }

    /// Everything stored for `id`, serialized.
    pub async fn record(&self, id: &str) -> Result<Vec<u8>> {
        let inner = self.inner.lock().await;
        let rec = inner
            .records
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("proof request {id}")))?;
        Ok(serde_json::to_vec(rec).expect("record serializes"))
    }

    /// The request as sent to the holder.
    pub async fn request(&self, id: &str) -> Result<PresentationRequest> {
        let inner = self.inner.lock().await;
        inner
            .records
            .get(id)
            .map(|r| r.request.clone())
            .ok_or_else(|| ServiceError::NotFound(format!("proof request {id}")))
    }

    fn step(inner: &mut Inner, id: &str, input: PresentInput) -> Vec<Message> {
        let Some(rec) = inner.records.get_mut(id) else {
            return Vec::new();
        };
        let (flow, out) = rec.flow.step(input);
        rec.flow = flow;
        out
    }

    async fn check(&self, trust: &mut TrustCache, request: &PresentationRequest, pres: &Presentation) -> Result<Verdict> {
        let l = self.ledger.as_ref();
        let def = api::cred_def(l, &self.genesis, &pres.cred_def_id).await?;
        let schema = api::schema(l, &self.genesis, &request.schema_id).await?;
        let acc = api::accumulator(l, &self.genesis, &registry_id(&def.cred_def_id), None).await?;
        let did = vaxpass_agent::Did::parse(&def.issuer_did)?;
        let trusted = if trust.check(l, &did).await? {
            vec![def.issuer_did.clone()]
        } else {
            Vec::new()
        };
        Ok(verify_presentation(&def, &schema, request, pres, &acc, &trusted))
    }

    async fn handle(&self, inbound: Inbound) -> Result<Vec<Envelope>> {
        let mut inner = self.inner.lock().await;
        match inbound {
            Inbound::Connect(req) => {
                let conn = inner.host.accept(&req)?;
                let Some(id) = inner.by_invitation.remove(&req.invitation_nonce) else {
                    return Ok(Vec::new());
                };
                inner.by_connection.insert(conn.clone(), id.clone());
                let rec = inner.records.get_mut(&id).expect("record exists");
                rec.connection = Some(conn.clone());
                let request = rec.request.clone();
                let out = Self::step(&mut inner, &id, PresentInput::Request(request));
                Ok(inner.host.seal(&conn, &out))
            }
            Inbound::Envelope(env) => {
                let (conn, msg) = inner.host.open(&env)?;
                let Some(id) = inner.by_connection.get(&conn).cloned() else {
                    return Ok(Vec::new());
                };
                let mut out = Self::step(&mut inner, &id, PresentInput::Receive(msg));
                let presented = match inner.records.get(&id) {
                    Some(rec) => match &rec.flow.state {
                        PresentState::Presented { request, presentation } => {
                            Some((request.clone(), presentation.clone(), rec.created))
                        }
                        _ => None,
                    },
                    None => None,
                };
                if let Some((request, pres, created)) = presented {
                    let input = if created.elapsed() > Duration::from_secs(request.freshness_secs) {
                        PresentInput::Abort(ProblemReport::new(EXPIRED_REQUEST, "presentation arrived too late"))
                    } else {
                        match self.check(&mut inner.trust, &request, &pres).await {
                            Ok(v) => PresentInput::Verdict(v),
                            Err(e) => PresentInput::Abort(ProblemReport::new(e.code(), e.to_string())),
                        }
                    };
                    out.extend(Self::step(&mut inner, &id, input));
                }
                Ok(inner.host.seal(&conn, &out))
            }
        }
    }

    pub fn router(&self) -> Router {
        let r = Router::new()
            .route("/proof-requests", post(create_h))
            .route("/proof-requests/{id}", get(status_h))
            .route("/didcomm", post(crate::issuer::didcomm_h::<VerifierService>))
            .route("/health", get(health_h))
            .with_state(self.clone());
        crate::finish_router(r)
    }
}

#[async_trait]
impl Inbox for VerifierService {
    async fn receive(&self, bytes: Vec<u8>) -> Result<Vec<Envelope>> {
        let inbound = Inbound::from_bytes(&bytes)?;
        self.handle(inbound).await
    }
}

async fn create_h(State(s): State<VerifierService>, body: axum::body::Bytes) -> Result<(StatusCode, Json<Created>)> {
    let template: ProofTemplate =
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadTemplate(e.to_string()))?;
    Ok((StatusCode::CREATED, Json(s.create(template).await?)))
}

async fn status_h(State(s): State<VerifierService>, Path(id): Path<String>) -> Result<Json<StatusView>> {
    Ok(Json(s.status(&id).await?))
}

async fn health_h(State(s): State<VerifierService>) -> Result<Json<Value>> {
    let h = s.ledger.health().await?;
    let did = s.inner.lock().await.host.identity.did();
    Ok(Json(serde_json::json!({ "did": did, "ledger_height": h.height })))
}
