//! The role-facing deployables: the issuer (vaccinator) and verifier HTTP
//! services, the holder wallet with its encrypted store, and the helpers
//! they share for ledger access, trust checks and agent messaging.

pub mod config;
pub mod host;
pub mod issuer;
pub mod peer;
pub mod record;
pub mod trust;
pub mod verifier;
pub mod wallet;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vaxpass_agent::AgentError;
use vaxpass_anoncreds::AnonCredsError;
use vaxpass_ledger::LedgerError;
use vaxpass_revocation::RevocationError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("missing field {0}")]
    MissingField(String),
    #[error("bad format: {0}")]
    BadFormat(String),
    #[error("bad template: {0}")]
    BadTemplate(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("cannot satisfy the request: {0}")]
    CannotSatisfy(String),
    #[error("wrong passphrase or damaged wallet")]
    DecryptFailed,
    #[error("wallet file is not a wallet: {0}")]
    CorruptStore(String),
    #[error("wallet is in use by another process")]
    StoreLocked,
    #[error("method not allowed")]
    MethodNotAllowed,
    #[error("{0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("protocol: {code}: {reason}")]
    Protocol { code: String, reason: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Credential(#[from] AnonCredsError),
    #[error(transparent)]
    Revocation(#[from] RevocationError),
}

impl ServiceError {
    pub fn code(&self) -> &str {
        match self {
            ServiceError::MissingField(_) => "MISSING_FIELD",
            ServiceError::BadFormat(_) => "BAD_FORMAT",
            ServiceError::BadTemplate(_) => "BAD_TEMPLATE",
            ServiceError::NotFound(_) => "NOT_FOUND",
            ServiceError::UnknownItem(_) => "UNKNOWN_ITEM",
            ServiceError::CannotSatisfy(_) => "CANNOT_SATISFY",
            ServiceError::DecryptFailed => "DECRYPT_FAILED",
            ServiceError::CorruptStore(_) => "CORRUPT_STORE",
            ServiceError::StoreLocked => "STORE_LOCKED",
            ServiceError::MethodNotAllowed => "METHOD_NOT_ALLOWED",
            ServiceError::Io(_) => "IO",
            ServiceError::Config(_) => "CONFIG",
            ServiceError::Protocol { code, .. } => code,
            ServiceError::Ledger(e) => e.code(),
            ServiceError::Agent(e) => e.code(),
            ServiceError::Credential(AnonCredsError::CannotSatisfy(_)) => "CANNOT_SATISFY",
            ServiceError::Credential(e) => e.code(),
            ServiceError::Revocation(e) => e.code(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::MissingField(_)
            | ServiceError::BadFormat(_)
            | ServiceError::BadTemplate(_)
            | ServiceError::Credential(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) | ServiceError::UnknownItem(_) => StatusCode::NOT_FOUND,
            ServiceError::MethodNotAllowed => StatusCode::METHOD_NOT_ALLOWED,
            ServiceError::Ledger(LedgerError::Unavailable(_) | LedgerError::NoQuorum(_)) => {
                StatusCode::SERVICE_UNAVAILABLE
            }
            ServiceError::Ledger(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Agent(AgentError::AuthFail | AgentError::BadSignature) => StatusCode::FORBIDDEN,
            ServiceError::Agent(AgentError::Transport(_)) => StatusCode::BAD_GATEWAY,
            ServiceError::Agent(_) => StatusCode::BAD_REQUEST,
            ServiceError::Protocol { .. }
            | ServiceError::CannotSatisfy(_)
            | ServiceError::Revocation(_)
            | ServiceError::StoreLocked => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code().into(),
            message: self.to_string(),
        }
    }
}

/// JSON body of every error response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;

/// Strictly increasing transaction sequence numbers: wall-clock
/// microseconds, bumped past the last value used.
pub fn next_sequence(last: &mut u64) -> u64 {
    let now = u64::try_from(chrono::Utc::now().timestamp_micros()).unwrap_or(0);
    *last = now.max(*last + 1);
    *last
}

pub fn parse_genesis_hash(hex_str: &str) -> Result<[u8; 32]> {
    let mut out = [0u8; 32];
    hex::decode_to_slice(hex_str.trim(), &mut out)
        .map_err(|_| ServiceError::Config(format!("genesis hash must be 32 hex bytes: {hex_str:?}")))?;
    Ok(out)
}

/// Revocation registry of a credential definition. Each definition has
/// exactly one, so holders and verifiers derive its id.
pub fn registry_id(cred_def_id: &str) -> String {
    vaxpass_ledger::RevRegDef::id_for(cred_def_id, "default")
}

/// Replace `path` with `bytes` via a sibling temporary file.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Shared finishing for every service router: coded JSON bodies for
/// unknown routes and methods, and permissive CORS so the browser
/// companion can call in.
pub fn finish_router(router: axum::Router) -> axum::Router {
    router
        .fallback(|| async { ServiceError::NotFound("no such route".into()) })
        .method_not_allowed_fallback(|| async { ServiceError::MethodNotAllowed })
        .layer(tower_http::cors::CorsLayer::permissive())
}

/// Client for the first configured ledger node.
pub fn ledger_client(urls: &[String]) -> Result<std::sync::Arc<dyn vaxpass_ledger::LedgerApi>> {
    let first = urls
        .first()
        .ok_or_else(|| ServiceError::Config("no ledger endpoints configured".into()))?;
    Ok(std::sync::Arc::new(vaxpass_ledger::HttpLedger::new(first)))
}

/// Log to stderr; `VAXPASS_LOG=debug` for more.
pub fn init_logging() {
    let level = match std::env::var("VAXPASS_LOG").as_deref() {
        Ok("debug") => tracing::Level::DEBUG,
        Ok("warn") => tracing::Level::WARN,
        _ => tracing::Level::INFO,
    };
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Bind `listen` and serve `app` until the process ends.
pub async fn serve(listen: &str, app: axum::Router) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
