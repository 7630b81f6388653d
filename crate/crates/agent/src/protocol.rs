//! Issue-credential and present-proof state machines.
//!
//! Machines are pure: `step` maps a state and an input to the next state
//! and the messages to send. Inputs are either received messages or local
//! decisions whose payloads the caller has already computed (the holder's
//! blinded request after consent, the issuer's signature, a verdict).
//! Anything received out of order moves a live flow to `failed` with a
//! `PROTOCOL_ERROR` problem report. Terminal states ignore all input.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use vaxpass_anoncreds::{IssuanceRequest, PartialCredential, Presentation, PresentationRequest, Verdict};

pub const PROTOCOL_ERROR: &str = "PROTOCOL_ERROR";
pub const DECLINED: &str = "DECLINED";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemReport {
    pub code: String,
    pub reason: String,
}

impl ProblemReport {
    pub fn new(code: &str, reason: impl Into<String>) -> Self {
        ProblemReport {
            code: code.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialOffer {
    pub cred_def_id: String,
    pub schema_id: String,
    #[serde(with = "hex::serde")]
    pub nonce: [u8; 32],
    /// Raw values the credential will carry, shown to the holder for consent.
    pub preview: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Offer(CredentialOffer),
    Request(IssuanceRequest),
    Issue(Box<PartialCredential>),
    Ack,
    ProofRequest(PresentationRequest),
    Presentation(Box<Presentation>),
    Result(Verdict),
    Decline(ProblemReport),
    ProblemReport(ProblemReport),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Offer,
    Request,
    Issue,
    Ack,
    ProofRequest,
    Presentation,
    Result,
    Decline,
    ProblemReport,
}

impl MessageKind {
    pub const ALL: [MessageKind; 9] = [
        MessageKind::Offer,
        MessageKind::Request,
        MessageKind::Issue,
        MessageKind::Ack,
        MessageKind::ProofRequest,
        MessageKind::Presentation,
        MessageKind::Result,
        MessageKind::Decline,
        MessageKind::ProblemReport,
    ];
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Offer(_) => MessageKind::Offer,
            Message::Request(_) => MessageKind::Request,
            Message::Issue(_) => MessageKind::Issue,
            Message::Ack => MessageKind::Ack,
            Message::ProofRequest(_) => MessageKind::ProofRequest,
            Message::Presentation(_) => MessageKind::Presentation,
            Message::Result(_) => MessageKind::Result,
            Message::Decline(_) => MessageKind::Decline,
            Message::ProblemReport(_) => MessageKind::ProblemReport,
        }
    }
}

fn protocol_error(state: &str, kind: MessageKind) -> ProblemReport {
    ProblemReport::new(PROTOCOL_ERROR, format!("{kind:?} not expected in state {state}"))
}

/// A problem report or decline from the peer ends the flow.
fn peer_stop(report: &ProblemReport) -> (String, bool) {
    (report.code.clone(), report.code == DECLINED)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueRole {
    Issuer,
    Holder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum IssueState {
    Start,
    Offered { offer: CredentialOffer },
    Requested { offer: CredentialOffer, request: IssuanceRequest },
    Issued { credential: Box<PartialCredential> },
    Acked,
    Declined { code: String },
    Failed { code: String },
}

impl IssueState {
    pub fn name(&self) -> &'static str {
        match self {
            IssueState::Start => "start",
            IssueState::Offered { .. } => "offered",
            IssueState::Requested { .. } => "requested",
            IssueState::Issued { .. } => "issued",
            IssueState::Acked => "acked",
            IssueState::Declined { .. } => "declined",
            IssueState::Failed { .. } => "failed",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, IssueState::Acked | IssueState::Declined { .. } | IssueState::Failed { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IssueInput {
    Receive(Message),
    /// Issuer: send the offer.
    Offer(CredentialOffer),
    /// Holder: consent given, blinded request built.
    Accept(IssuanceRequest),
    /// Holder: consent refused.
    Decline,
    /// Issuer: request verified and signed.
    Issue(Box<PartialCredential>),
    /// Holder: credential completed, verified and stored.
    Stored,
    /// Either side: local processing failed.
    Abort(ProblemReport),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueFlow {
    pub role: IssueRole,
    pub state: IssueState,
}

impl IssueFlow {
    pub fn new(role: IssueRole) -> Self {
        IssueFlow {
            role,
            state: IssueState::Start,
        }
    }

    pub fn step(&self, input: IssueInput) -> (IssueFlow, Vec<Message>) {
        use IssueInput as I;
        use IssueRole::*;
        use IssueState as S;
        if self.state.is_terminal() {
            return (self.clone(), Vec::new());
        }
        let next = |state: IssueState, out: Vec<Message>| (IssueFlow { role: self.role, state }, out);
        let fail = |report: ProblemReport| {
            next(
                S::Failed {
                    code: report.code.clone(),
                },
                vec![Message::ProblemReport(report)],
            )
        };
        match (self.role, &self.state, input) {
            (_, _, I::Receive(Message::ProblemReport(r) | Message::Decline(r))) => {
                let (code, declined) = peer_stop(&r);
                next(if declined { S::Declined { code } } else { S::Failed { code } }, Vec::new())
            }
            (_, _, I::Abort(r)) => fail(r),

            (Issuer, S::Start, I::Offer(offer)) => next(S::Offered { offer: offer.clone() }, vec![Message::Offer(offer)]),
            (Issuer, S::Offered { offer }, I::Receive(Message::Request(request))) => next(
                S::Requested {
                    offer: offer.clone(),
                    request,
                },
                Vec::new(),
            ),
            (Issuer, S::Requested { .. }, I::Issue(credential)) => {
                next(S::Issued { credential: credential.clone() }, vec![Message::Issue(credential)])
            }
            (Issuer, S::Issued { .. }, I::Receive(Message::Ack)) => next(S::Acked, Vec::new()),

            (Holder, S::Start, I::Receive(Message::Offer(offer))) => next(S::Offered { offer }, Vec::new()),
            (Holder, S::Offered { offer }, I::Accept(request)) => next(
                S::Requested {
                    offer: offer.clone(),
                    request: request.clone(),
                },
                vec![Message::Request(request)],
            ),
            (Holder, S::Offered { .. }, I::Decline) => next(
                S::Declined { code: DECLINED.into() },
                vec![Message::ProblemReport(ProblemReport::new(DECLINED, "holder declined the offer"))],
            ),
            (Holder, S::Requested { .. }, I::Receive(Message::Issue(credential))) => {
                next(S::Issued { credential }, Vec::new())
            }
            (Holder, S::Issued { .. }, I::Stored) => next(S::Acked, vec![Message::Ack]),

            (_, state, I::Receive(m)) => fail(protocol_error(state.name(), m.kind())),
            (_, state, local) => fail(ProblemReport::new(
                PROTOCOL_ERROR,
                format!("local input {local:?} not allowed in state {}", state.name()),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentRole {
    Verifier,
    Holder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum PresentState {
    Start,
    Requested { request: PresentationRequest },
    Presented { request: PresentationRequest, presentation: Box<Presentation> },
    Verified { revealed: BTreeMap<String, String> },
    Declined { code: String },
    Failed { code: String },
}

impl PresentState {
    pub fn name(&self) -> &'static str {
        match self {
            PresentState::Start => "start",
            PresentState::Requested { .. } => "requested",
            PresentState::Presented { .. } => "presented",
            PresentState::Verified { .. } => "verified",
            PresentState::Declined { .. } => "declined",
            PresentState::Failed { .. } => "failed",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            PresentState::Verified { .. } | PresentState::Declined { .. } | PresentState::Failed { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PresentInput {
    Receive(Message),
    /// Verifier: send the request.
    Request(PresentationRequest),
    /// Holder: consent given, presentation built.
    Present(Box<Presentation>),
    /// Holder: refused, or the request cannot be satisfied.
    Decline(ProblemReport),
    /// Verifier: result of checking the received presentation.
    Verdict(Verdict),
    Abort(ProblemReport),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentFlow {
    pub role: PresentRole,
    pub state: PresentState,
}

impl PresentFlow {
    pub fn new(role: PresentRole) -> Self {
        PresentFlow {
            role,
            state: PresentState::Start,
        }
    }

    pub fn step(&self, input: PresentInput) -> (PresentFlow, Vec<Message>) {
        use PresentInput as I;
        use PresentRole::*;
        use PresentState as S;
        if self.state.is_terminal() {
            return (self.clone(), Vec::new());
        }
        let next = |state: PresentState, out: Vec<Message>| (PresentFlow { role: self.role, state }, out);
        let fail = |report: ProblemReport| {
            next(
                S::Failed {
                    code: report.code.clone(),
                },
                vec![Message::ProblemReport(report)],
            )
        };
        match (self.role, &self.state, input) {
            (_, _, I::Receive(Message::ProblemReport(r))) => next(S::Failed { code: r.code }, Vec::new()),
            (Verifier, S::Requested { .. }, I::Receive(Message::Decline(r))) => {
                next(S::Declined { code: r.code }, Vec::new())
            }
            (_, _, I::Abort(r)) => fail(r),

            (Verifier, S::Start, I::Request(request)) => next(
                S::Requested {
                    request: request.clone(),
                },
                vec![Message::ProofRequest(request)],
            ),
            (Verifier, S::Requested { request }, I::Receive(Message::Presentation(presentation))) => next(
                S::Presented {
                    request: request.clone(),
                    presentation,
                },
                Vec::new(),
            ),
            (Verifier, S::Presented { presentation, .. }, I::Verdict(verdict)) => {
                let state = match &verdict {
                    Verdict::Accept => S::Verified {
                        revealed: presentation.revealed.clone(),
                    },
                    Verdict::Reject(reason) => S::Failed {
                        code: reason.code().into(),
                    },
                };
                next(state, vec![Message::Result(verdict)])
            }

            (Holder, S::Start, I::Receive(Message::ProofRequest(request))) => next(S::Requested { request }, Vec::new()),
            (Holder, S::Requested { request }, I::Present(presentation)) => next(
                S::Presented {
                    request: request.clone(),
                    presentation: presentation.clone(),
                },
                vec![Message::Presentation(presentation)],
            ),
            (Holder, S::Requested { .. }, I::Decline(report)) => next(
                S::Declined {
                    code: report.code.clone(),
                },
                vec![Message::Decline(report)],
            ),
            (Holder, S::Presented { presentation, .. }, I::Receive(Message::Result(verdict))) => match verdict {
                Verdict::Accept => next(
                    S::Verified {
                        revealed: presentation.revealed.clone(),
                    },
                    Vec::new(),
                ),
                Verdict::Reject(reason) => next(
                    S::Failed {
                        code: reason.code().into(),
                    },
                    Vec::new(),
                ),
            },

            (_, state, I::Receive(m)) => fail(protocol_error(state.name(), m.kind())),
            (_, state, local) => fail(ProblemReport::new(
                PROTOCOL_ERROR,
                format!("local input {local:?} not allowed in state {}", state.name()),
            )),
        }
    }
}
