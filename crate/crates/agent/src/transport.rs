use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use vaxpass_core::canonical;

use crate::envelope::Envelope;
use crate::invitation::ConnectionRequest;
use crate::{AgentError, Result};

/// Everything delivered to an agent endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Inbound {
    Connect(ConnectionRequest),
    Envelope(Envelope),
}

impl Inbound {
    pub fn to_bytes(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Inbound> {
        serde_json::from_slice(bytes).map_err(|_| AgentError::BadPayload)
    }
}

#[async_trait]
pub trait Transport: Send + Sync {
    async fn deliver(&self, endpoint: &str, bytes: Vec<u8>) -> Result<()>;
}

/// In-process queues keyed by endpoint string.
#[derive(Clone, Default)]
pub struct InProcessHub {
    queues: Arc<Mutex<HashMap<String, mpsc::UnboundedSender<Vec<u8>>>>>,
}

impl InProcessHub {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&self, endpoint: &str) -> mpsc::UnboundedReceiver<Vec<u8>> {
        let (tx, rx) = mpsc::unbounded_channel();
        self.queues.lock().unwrap().insert(endpoint.into(), tx);
        rx
    }
}

#[async_trait]
impl Transport for InProcessHub {
    async fn deliver(&self, endpoint: &str, bytes: Vec<u8>) -> Result<()> {
        let tx = self
            .queues
            .lock()
            .unwrap()
            .get(endpoint)
            .cloned()
            .ok_or_else(|| AgentError::Transport(format!("no agent at {endpoint}")))?;
        tx.send(bytes)
            .map_err(|_| AgentError::Transport(format!("{endpoint} stopped")))
    }
}
