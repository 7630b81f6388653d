//! Request/response delivery between agents.
//!
//! The holder wallet has no listening endpoint, so a service answers each
//! delivery with the envelopes it wants to send back on the same
//! connection (return routing). Both transports carry the bytes of
//! [`Inbound::to_bytes`] unchanged.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use async_trait::async_trait;
use vaxpass_agent::{AgentError, Envelope, Inbound};

use crate::{ErrorBody, Result, ServiceError};

/// Receiving side of an agent endpoint.
#[async_trait]
pub trait Inbox: Send + Sync {
    async fn receive(&self, bytes: Vec<u8>) -> Result<Vec<Envelope>>;
}

/// Sending side: deliver to `endpoint`, collect the replies.
#[async_trait]
pub trait Exchange: Send + Sync {
    async fn send(&self, endpoint: &str, message: &Inbound) -> Result<Vec<Envelope>>;
}

/// Direct calls into registered inboxes.
#[derive(Clone, Default)]
pub struct InProcess {
    inboxes: Arc<RwLock<HashMap<String, Arc<dyn Inbox>>>>,
}

impl InProcess {
    pub fn new() -> InProcess {
        InProcess::default()
    }

    pub fn register(&self, endpoint: &str, inbox: Arc<dyn Inbox>) {
        self.inboxes.write().unwrap().insert(endpoint.into(), inbox);
    }
}

#[async_trait]
impl Exchange for InProcess {
    async fn send(&self, endpoint: &str, message: &Inbound) -> Result<Vec<Envelope>> {
        let inbox = self
            .inboxes
            .read()
            .unwrap()
            .get(endpoint)
            .cloned()
            .ok_or_else(|| AgentError::Transport(format!("no agent at {endpoint}")))?;
        inbox.receive(message.to_bytes()).await
    }
}

/// `POST <endpoint>` with the inbound bytes; the response body is a JSON
/// array of envelopes or an error body.
#[derive(Clone, Default)]
pub struct Http {
    client: reqwest::Client,
}

impl Http {
    pub fn new() -> Http {
        Http::default()
    }
}

#[async_trait]
impl Exchange for Http {
    async fn send(&self, endpoint: &str, message: &Inbound) -> Result<Vec<Envelope>> {
        let network = |e: reqwest::Error| ServiceError::Agent(AgentError::Transport(e.to_string()));
        let resp = self
            .client
            .post(endpoint)
            .header("content-type", "application/json")
            .body(message.to_bytes())
            .send()
            .await
            .map_err(network)?;
        if resp.status().is_success() {
            return resp.json().await.map_err(network);
        }
        let status = resp.status();
        match resp.json::<ErrorBody>().await {
            Ok(b) => Err(ServiceError::Protocol {
                code: b.code,
                reason: b.message,
            }),
            Err(_) => Err(AgentError::Transport(format!("HTTP {status}")).into()),
        }
    }
}
