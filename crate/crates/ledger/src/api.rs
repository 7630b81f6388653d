//! Node API: the [`LedgerApi`] trait, an in-process implementation, the
//! axum router serving it and an HTTP client.

use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use axum::extract::{Query as QueryParams, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use vaxpass_agent::Did;
use vaxpass_anoncreds::{CredentialDefinition, CredentialSchema};
use vaxpass_revocation::{PublicAccumulator, RegistryDelta};

use crate::block::Block;
use crate::node::{Cluster, Health, QueryResponse, Receipt};
use crate::tx::{RevRegDef, RevRegEntry, Transaction, TxKind};
use crate::{ErrorBody, LedgerError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub kind: TxKind,
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
}

/// Trusted DIDs at a given height.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustSnapshot {
    pub height: u64,
    pub dids: Vec<Did>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BlockRange {
    from: u64,
    #[serde(default)]
    to: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DeltaQuery {
    rev_reg_id: String,
    from_epoch: u64,
}

#[async_trait]
pub trait LedgerApi: Send + Sync {
    async fn submit(&self, tx: Transaction) -> Result<Receipt>;
    async fn query(&self, q: Query) -> Result<QueryResponse>;
    /// Blocks `from..=to` (to the tip when `to` is `None`).
    async fn blocks(&self, from: u64, to: Option<u64>) -> Result<Vec<Block>>;
    async fn trust_list(&self) -> Result<TrustSnapshot>;
    async fn deltas(&self, rev_reg_id: &str, from_epoch: u64) -> Result<Vec<RegistryDelta>>;
    async fn health(&self) -> Result<Health>;
}

/// Query, check inclusion against `genesis` and decode the payload.
pub async fn fetch<T: DeserializeOwned>(l: &dyn LedgerApi, genesis: &[u8; 32], q: Query) -> Result<(T, QueryResponse)> {
    let resp = l.query(q).await?;
    resp.verify(genesis)?;
    Ok((resp.transaction.decode()?, resp))
}

pub async fn schema(l: &dyn LedgerApi, genesis: &[u8; 32], id: &str) -> Result<CredentialSchema> {
    Ok(fetch(l, genesis, query(TxKind::Schema, id)).await?.0)
}

pub async fn cred_def(l: &dyn LedgerApi, genesis: &[u8; 32], id: &str) -> Result<CredentialDefinition> {
    Ok(fetch(l, genesis, query(TxKind::CredDef, id)).await?.0)
}

/// Trust-list membership, inclusion-checked. Absence is `Ok(false)`.
pub async fn is_trusted(l: &dyn LedgerApi, genesis: &[u8; 32], did: &Did) -> Result<bool> {
    match l.query(query(TxKind::TrustList, did.as_str())).await {
        Ok(resp) => resp.verify(genesis).map(|_| true),
        Err(LedgerError::NotFound(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Registry value at `epoch` (latest when `None`), inclusion-checked.
pub async fn accumulator(
    l: &dyn LedgerApi,
    genesis: &[u8; 32],
    rev_reg_id: &str,
    epoch: Option<u64>,
) -> Result<PublicAccumulator> {
    let (def, _): (RevRegDef, _) = fetch(l, genesis, query(TxKind::RevRegDef, rev_reg_id)).await?;
    let resp = l
        .query(Query {
            kind: TxKind::RevRegEntry,
            key: rev_reg_id.into(),
            epoch,
        })
        .await?;
    resp.verify(genesis)?;
    let tx = &resp.transaction;
    let (value, at) = match tx.kind {
        TxKind::RevRegDef => (tx.decode::<RevRegDef>()?.value, 0),
        TxKind::RevRegEntry => {
            let e: RevRegEntry = tx.decode()?;
            if e.rev_reg_id != rev_reg_id {
                return Err(LedgerError::InclusionFailed("entry for another registry".into()));
            }
            (e.delta.value, e.delta.to_epoch)
        }
        _ => return Err(LedgerError::InclusionFailed("unexpected transaction kind".into())),
    };
    if epoch.is_some_and(|e| e != at) {
        return Err(LedgerError::InclusionFailed("entry for another epoch".into()));
    }
    Ok(PublicAccumulator {
        params: def.params,
        value,
        epoch: at,
    })
}

pub fn query(kind: TxKind, key: &str) -> Query {
    Query {
        kind,
        key: key.into(),
        epoch: None,
    }
}

/// In-process access to a cluster.
#[derive(Clone, Debug)]
pub struct LocalLedger {
    pub cluster: Arc<Mutex<Cluster>>,
}

impl LocalLedger {
    pub fn new(cluster: Cluster) -> LocalLedger {
        LocalLedger {
            cluster: Arc::new(Mutex::new(cluster)),
        }
    }

    pub fn with<T>(&self, f: impl FnOnce(&mut Cluster) -> T) -> T {
        f(&mut self.cluster.lock().expect("cluster lock"))
    }
}

#[async_trait]
impl LedgerApi for LocalLedger {
    async fn submit(&self, tx: Transaction) -> Result<Receipt> {
        self.with(|c| c.submit(tx))
    }

    async fn query(&self, q: Query) -> Result<QueryResponse> {
        self.with(|c| c.query(q.kind, &q.key, q.epoch))
    }

    async fn blocks(&self, from: u64, to: Option<u64>) -> Result<Vec<Block>> {
        self.with(|c| {
            let blocks = &c.view()?.blocks;
            let end = to.map_or(blocks.len(), |t| (t as usize + 1).min(blocks.len()));
            Ok(blocks.get(from as usize..end).unwrap_or_default().to_vec())
        })
    }

    async fn trust_list(&self) -> Result<TrustSnapshot> {
        self.with(|c| {
            let r = c.view()?;
            Ok(TrustSnapshot {
                height: r.height(),
                dids: r.state.trusted.keys().cloned().collect(),
            })
        })
    }

    async fn deltas(&self, rev_reg_id: &str, from_epoch: u64) -> Result<Vec<RegistryDelta>> {
        self.with(|c| c.view()?.state.deltas(rev_reg_id, from_epoch))
    }

    async fn health(&self) -> Result<Health> {
        Ok(self.with(|c| c.health()))
    }
}

struct ApiError(LedgerError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            LedgerError::Unauthorized(_) => StatusCode::FORBIDDEN,
            LedgerError::NotFound(_) => StatusCode::NOT_FOUND,
            LedgerError::DuplicateId(_) | LedgerError::StaleSequence { .. } | LedgerError::EpochGap { .. } => {
                StatusCode::CONFLICT
            }
            LedgerError::InvalidPayload(_) | LedgerError::InclusionFailed(_) => StatusCode::BAD_REQUEST,
            LedgerError::NoQuorum(_) | LedgerError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self.0.to_body())).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn wrap<T>(r: Result<T>) -> ApiResult<T> {
    r.map(Json).map_err(ApiError)
}

async fn submit_h(State(l): State<LocalLedger>, body: axum::body::Bytes) -> ApiResult<Receipt> {
    let tx: Transaction =
        serde_json::from_slice(&body).map_err(|e| ApiError(LedgerError::InvalidPayload(e.to_string())))?;
    wrap(l.submit(tx).await)
}

async fn query_h(State(l): State<LocalLedger>, QueryParams(q): QueryParams<Query>) -> ApiResult<QueryResponse> {
    wrap(l.query(q).await)
}

async fn blocks_h(State(l): State<LocalLedger>, QueryParams(r): QueryParams<BlockRange>) -> ApiResult<Vec<Block>> {
    wrap(l.blocks(r.from, r.to).await)
}

async fn trust_h(State(l): State<LocalLedger>) -> ApiResult<TrustSnapshot> {
    wrap(l.trust_list().await)
}

async fn deltas_h(State(l): State<LocalLedger>, QueryParams(q): QueryParams<DeltaQuery>) -> ApiResult<Vec<RegistryDelta>> {
    wrap(l.deltas(&q.rev_reg_id, q.from_epoch).await)
}

async fn health_h(State(l): State<LocalLedger>) -> ApiResult<Health> {
    wrap(l.health().await)
}

/// `POST /submit`, `GET /query`, `GET /blocks`, `GET /trust-list`,
/// `GET /deltas`, `GET /health`.
pub fn router(ledger: LocalLedger) -> Router {
    Router::new()
        .route("/submit", post(submit_h))
        .route("/query", get(query_h))
        .route("/blocks", get(blocks_h))
        .route("/trust-list", get(trust_h))
        .route("/deltas", get(deltas_h))
        .route("/health", get(health_h))
        .with_state(ledger)
}

/// Client for a node's HTTP API. Connection failures surface as
/// `LEDGER_UNAVAILABLE`.
#[derive(Clone, Debug)]
pub struct HttpLedger {
    base: String,
    client: reqwest::Client,
}

impl HttpLedger {
    pub fn new(base: &str) -> HttpLedger {
        HttpLedger {
            base: base.trim_end_matches('/').to_string(),
            client: reqwest::Client::new(),
        }
    }

    async fn read<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T> {
        let unavailable = |e: reqwest::Error| LedgerError::Unavailable(e.to_string());
        if resp.status().is_success() {
            return resp.json().await.map_err(unavailable);
        }
        let status = resp.status();
        match resp.json::<ErrorBody>().await {
            Ok(body) => Err(LedgerError::from_body(body)),
            Err(_) => Err(LedgerError::Unavailable(format!("HTTP {status}"))),
        }
    }

    async fn get<T: DeserializeOwned, Q: Serialize + ?Sized>(&self, path: &str, q: &Q) -> Result<T> {
        let resp = self
            .client
            .get(format!("{}{path}", self.base))
            .query(q)
            .send()
            .await
            .map_err(|e| LedgerError::Unavailable(e.to_string()))?;
        Self::read(resp).await
    }
}

#[async_trait]
impl LedgerApi for HttpLedger {
    async fn submit(&self, tx: Transaction) -> Result<Receipt> {
        let resp = self
            .client
            .post(format!("{}/submit", self.base))
            .json(&tx)
            .send()
            .await
            .map_err(|e| LedgerError::Unavailable(e.to_string()))?;
        Self::read(resp).await
    }

    async fn query(&self, q: Query) -> Result<QueryResponse> {
        self.get("/query", &q).await
    }

    async fn blocks(&self, from: u64, to: Option<u64>) -> Result<Vec<Block>> {
        self.get("/blocks", &BlockRange { from, to }).await
    }

    async fn trust_list(&self) -> Result<TrustSnapshot> {
        self.get("/trust-list", &()).await
    }

    async fn deltas(&self, rev_reg_id: &str, from_epoch: u64) -> Result<Vec<RegistryDelta>> {
        self.get(
            "/deltas",
            &DeltaQuery {
                rev_reg_id: rev_reg_id.into(),
                from_epoch,
            },
        )
        .await
    }

    async fn health(&self) -> Result<Health> {
        self.get("/health", &()).await
    }
}
