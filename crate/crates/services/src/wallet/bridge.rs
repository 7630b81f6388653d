//! Localhost HTTP bridge so a browser view can drive the wallet. Keys stay
//! in this process; every route maps onto one wallet operation.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::Value;
use tokio::sync::Mutex;
use vaxpass_ledger::LedgerApi;

use super::{Connected, ConnectionSummary, CredentialSummary, Decision, Event, PendingSummary, SyncReport, Wallet};
use crate::peer::Exchange;
use crate::Result;

#[derive(Clone)]
pub struct Bridge {
    wallet: Arc<Mutex<Wallet>>,
    exchange: Arc<dyn Exchange>,
    ledger: Arc<dyn LedgerApi>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    decision: Decision,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectBody {
    payload: String,
    consent: bool,
}

impl Bridge {
    pub fn new(wallet: Wallet, exchange: Arc<dyn Exchange>, ledger: Arc<dyn LedgerApi>) -> Bridge {
        Bridge {
            wallet: Arc::new(Mutex::new(wallet)),
            exchange,
            ledger,
        }
    }

    pub fn router(&self) -> Router {
        let r = Router::new()
            .route("/credentials", get(credentials_h))
            .route("/connections", get(connections_h))
            .route("/pending", get(pending_h))
            .route("/pending/{id}", post(respond_h))
            .route("/connect", post(connect_h))
            .route("/sync", post(sync_h))
            .route("/health", get(health_h))
            .with_state(self.clone());
        crate::finish_router(r)
    }
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| crate::ServiceError::BadFormat(e.to_string()))
}

async fn credentials_h(State(b): State<Bridge>) -> Json<Vec<CredentialSummary>> {
    Json(b.wallet.lock().await.list())
}

async fn connections_h(State(b): State<Bridge>) -> Json<Vec<ConnectionSummary>> {
    Json(b.wallet.lock().await.connections())
}

async fn pending_h(State(b): State<Bridge>) -> Json<Vec<PendingSummary>> {
    Json(b.wallet.lock().await.pending())
}

async fn respond_h(State(b): State<Bridge>, Path(id): Path<String>, body: axum::body::Bytes) -> Result<Json<Vec<Event>>> {
    let item = id
        .parse::<u64>()
        .map_err(|_| crate::ServiceError::UnknownItem(id.clone()))?;
    let d: DecisionBody = parse(&body)?;
    let mut w = b.wallet.lock().await;
    Ok(Json(w.respond(item, d.decision, b.exchange.as_ref(), b.ledger.as_ref()).await?))
}

async fn connect_h(State(b): State<Bridge>, body: axum::body::Bytes) -> Result<Json<Connected>> {
    let c: ConnectBody = parse(&body)?;
    let mut w = b.wallet.lock().await;
    Ok(Json(w.connect(&c.payload, c.consent, b.exchange.as_ref()).await?))
}

async fn sync_h(State(b): State<Bridge>) -> Result<Json<SyncReport>> {
    let mut w = b.wallet.lock().await;
    Ok(Json(w.sync(b.ledger.as_ref()).await?))
}

async fn health_h(State(b): State<Bridge>) -> Json<Value> {
    let w = b.wallet.lock().await;
    Json(serde_json::json!({ "did": w.did() }))
}
