//! Agent layer: `did:vax` identifiers, out-of-band invitations, pairwise
//! encrypted envelopes and the credential exchange state machines.

pub mod did;
pub mod envelope;
pub mod invitation;
pub mod protocol;
pub mod transport;

pub use did::{derive_did, Did, DidDocument, Identity};
pub use envelope::{Connection, Envelope, Role};
pub use invitation::{accept_invitation, create_invitation, ConnectionRequest, Invitation, InvitationBook, NonceLog};
pub use protocol::{
    CredentialOffer, IssueFlow, IssueInput, IssueRole, IssueState, Message, MessageKind, PresentFlow,
    PresentInput, PresentRole, PresentState, ProblemReport,
};
pub use transport::{InProcessHub, Inbound, Transport};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("malformed key")]
    BadKey,
    #[error("malformed DID {0}")]
    BadDid(String),
    #[error("signature does not verify")]
    BadSignature,
    #[error("invitation nonce already used")]
    NonceReused,
    #[error("invitation is not outstanding")]
    UnknownInvitation,
    #[error("declined by the user")]
    Declined,
    #[error("envelope failed authentication")]
    AuthFail,
    #[error("envelope already received")]
    Replay,
    #[error("payload cannot be decoded")]
    BadPayload,
    #[error("unknown connection {0}")]
    UnknownConnection(String),
    #[error("transport: {0}")]
    Transport(String),
}

impl AgentError {
    pub fn code(&self) -> &'static str {
        match self {
            AgentError::BadKey => "BAD_KEY",
            AgentError::BadDid(_) => "BAD_DID",
            AgentError::BadSignature => "BAD_SIGNATURE",
            AgentError::NonceReused => "NONCE_REUSED",
            AgentError::UnknownInvitation => "UNKNOWN_INVITATION",
            AgentError::Declined => "DECLINED",
            AgentError::AuthFail => "AUTH_FAIL",
            AgentError::Replay => "REPLAY",
            AgentError::BadPayload => "BAD_PAYLOAD",
            AgentError::UnknownConnection(_) => "UNKNOWN_CONNECTION",
            AgentError::Transport(_) => "NETWORK",
        }
    }
}

pub type Result<T> = std::result::Result<T, AgentError>;
