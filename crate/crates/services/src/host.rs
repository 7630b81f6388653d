use std::collections::HashMap;

use rand::rngs::OsRng;
use vaxpass_agent::{AgentError, Connection, ConnectionRequest, Envelope, Identity, Invitation, InvitationBook, Message};

use crate::Result;

/// Inviter-side connection bookkeeping for a service.
pub struct AgentHost {
    pub identity: Identity,
    /// Where holders deliver messages.
    pub endpoint: String,
    book: InvitationBook,
    connections: HashMap<String, Connection>,
}

impl AgentHost {
    pub fn new(identity: Identity, endpoint: &str) -> AgentHost {
        AgentHost {
            identity,
            endpoint: endpoint.into(),
            book: InvitationBook::default(),
            connections: HashMap::new(),
        }
    }

    pub fn invite(&mut self) -> Invitation {
        self.book.create(&self.identity, &self.endpoint, &mut OsRng)
    }

    /// Answer a connection request; returns the connection id.
    pub fn accept(&mut self, request: &ConnectionRequest) -> Result<String> {
        let conn = self.book.respond(&self.identity, request)?;
        let id = conn.id.clone();
        self.connections.insert(id.clone(), conn);
        Ok(id)
    }

    pub fn open(&mut self, env: &Envelope) -> Result<(String, Message)> {
        let conn = self
            .connections
            .get_mut(&env.connection_id)
            .ok_or_else(|| AgentError::UnknownConnection(env.connection_id.clone()))?;
        let msg = conn.unpack_json(env)?;
        Ok((env.connection_id.clone(), msg))
    }

    pub fn seal(&mut self, connection_id: &str, messages: &[Message]) -> Vec<Envelope> {
        let conn = self
            .connections
            .get_mut(connection_id)
            .expect("sealing on a known connection");
        messages.iter().map(|m| conn.pack_json(m, &mut OsRng)).collect()
    }
}
