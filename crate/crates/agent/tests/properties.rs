mod common;

use std::collections::HashSet;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use common::World;
use rand::rngs::OsRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vaxpass_agent::protocol::PROTOCOL_ERROR;
use vaxpass_agent::{
    accept_invitation, Connection, CredentialOffer, Identity, InvitationBook, IssueFlow, IssueInput, IssueRole,
    IssueState, Message, MessageKind, NonceLog, PresentFlow, PresentInput, PresentRole, PresentState, ProblemReport,
};
use vaxpass_anoncreds::{PresentationRequest, RejectReason, Verdict};
use vaxpass_core::canonical;

fn connect() -> (Connection, Connection) {
    let a = Identity::generate("a", &mut OsRng);
    let b = Identity::generate("b", &mut OsRng);
    let mut book = InvitationBook::default();
    let inv = book.create(&a, "a", &mut OsRng);
    let (holder, req) = accept_invitation(&inv, &b, true, &mut NonceLog::default(), &mut OsRng).unwrap();
    (book.respond(&a, &req).unwrap(), holder)
}

fn windows8(haystack: &[u8]) -> HashSet<&[u8]> {
    haystack.windows(8).collect()
}

#[test]
fn ciphertext_shares_no_8_byte_substring() {
    let (mut a, mut b) = connect();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for i in 0..1000 {
        let len = rng.gen_range(8..600);
        let alphabet = b"abcdefghijklmnopqrstuvwxyz0123456789 \"{}:,";
        let body: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char).collect();
        let plain = canonical::to_vec(&serde_json::json!({ "i": i, "body": body }));
        let env = a.pack(&plain, &mut OsRng);
        let mut wire = URL_SAFE_NO_PAD.decode(&env.ciphertext).unwrap();
        wire.extend(URL_SAFE_NO_PAD.decode(&env.tag).unwrap());
        let plain_windows = windows8(&plain);
        assert!(wire.windows(8).all(|w| !plain_windows.contains(w)), "message {i}");
        let json = canonical::to_vec(&env);
        assert!(json.windows(8).all(|w| !plain_windows.contains(w)), "envelope {i}");
        assert_eq!(b.unpack(&env).unwrap(), plain);
    }
}

#[test]
fn replays_and_cross_connection_injection_rejected() {
    let conns: Vec<(Connection, Connection)> = (0..4).map(|_| connect()).collect();
    let mut conns = conns;
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for trial in 0..400 {
        let i = rng.gen_range(0..conns.len());
        let j = (i + rng.gen_range(1..conns.len())) % conns.len();
        let env = conns[i].0.pack(format!("trial {trial}").as_bytes(), &mut OsRng);
        let mut injected = env.clone();
        injected.connection_id = conns[j].1.id.clone();
        assert_eq!(conns[j].1.unpack(&env).unwrap_err().code(), "AUTH_FAIL");
        assert_eq!(conns[j].1.unpack(&injected).unwrap_err().code(), "AUTH_FAIL");
        conns[i].1.unpack(&env).unwrap();
        assert_eq!(conns[i].1.unpack(&env).unwrap_err().code(), "REPLAY");
    }
}

struct Samples {
    offer: CredentialOffer,
    messages: Vec<Message>,
    issue_states: Vec<IssueState>,
    present_states: Vec<PresentState>,
}

fn samples() -> Samples {
    let mut w = World::new();
    let offer = w.offer();
    let (_, req) = w.request(&offer);
    let partial = w.issue(&offer, &req, "s1");
    let cred = w.credential("s2");
    let preq = PresentationRequest::new("r", &w.schema.schema_id, &mut OsRng);
    let pres = w.present(&cred, &preq).unwrap();
    let report = ProblemReport::new("X", "x");
    let messages = vec![
        Message::Offer(offer.clone()),
        Message::Request(req.clone()),
        Message::Issue(Box::new(partial.clone())),
        Message::Ack,
        Message::ProofRequest(preq.clone()),
        Message::Presentation(Box::new(pres.clone())),
        Message::Result(Verdict::Accept),
        Message::Decline(report.clone()),
        Message::ProblemReport(report),
    ];
    let issue_states = vec![
        IssueState::Start,
        IssueState::Offered { offer: offer.clone() },
        IssueState::Requested {
            offer: offer.clone(),
            request: req,
        },
        IssueState::Issued {
            credential: Box::new(partial),
        },
        IssueState::Acked,
        IssueState::Declined { code: "DECLINED".into() },
        IssueState::Failed { code: "X".into() },
    ];
    let present_states = vec![
        PresentState::Start,
        PresentState::Requested { request: preq.clone() },
        PresentState::Presented {
            request: preq,
            presentation: Box::new(pres),
        },
        PresentState::Verified {
            revealed: Default::default(),
        },
        PresentState::Declined { code: "CANNOT_SATISFY".into() },
        PresentState::Failed { code: "X".into() },
    ];
    Samples {
        offer,
        messages,
        issue_states,
        present_states,
    }
}

/// Declared receive edges: (role, state, message kind) -> next state name.
fn issue_edge(role: IssueRole, state: &str, kind: MessageKind) -> Option<&'static str> {
    use IssueRole::*;
    use MessageKind as K;
    match (role, state, kind) {
        (_, _, K::ProblemReport | K::Decline) => Some("failed"),
        (Issuer, "offered", K::Request) => Some("requested"),
        (Issuer, "issued", K::Ack) => Some("acked"),
        (Holder, "start", K::Offer) => Some("offered"),
        (Holder, "requested", K::Issue) => Some("issued"),
        _ => None,
    }
}

fn present_edge(role: PresentRole, state: &str, kind: MessageKind) -> Option<&'static str> {
    use MessageKind as K;
    use PresentRole::*;
    match (role, state, kind) {
        (_, _, K::ProblemReport) => Some("failed"),
        (Verifier, "requested", K::Decline) => Some("declined"),
        (Verifier, "requested", K::Presentation) => Some("presented"),
        (Holder, "start", K::ProofRequest) => Some("requested"),
        (Holder, "presented", K::Result) => Some("verified"),
        _ => None,
    }
}

fn is_protocol_error(out: &[Message]) -> bool {
    matches!(out, [Message::ProblemReport(r)] if r.code == PROTOCOL_ERROR)
}

#[test]
fn every_state_reacts_to_every_message() {
    let s = samples();
    let kinds: HashSet<MessageKind> = s.messages.iter().map(Message::kind).collect();
    assert_eq!(kinds.len(), MessageKind::ALL.len());
    let mut checked = 0;
    for role in [IssueRole::Issuer, IssueRole::Holder] {
        for state in &s.issue_states {
            let flow = IssueFlow { role, state: state.clone() };
            for m in &s.messages {
                let input = IssueInput::Receive(m.clone());
                let (next, out) = flow.step(input.clone());
                assert_eq!(flow.step(input), (next.clone(), out.clone()), "pure");
                if state.is_terminal() {
                    assert_eq!((&next, out.len()), (&flow, 0));
                } else if let Some(expected) = issue_edge(role, state.name(), m.kind()) {
                    let name = next.state.name();
                    assert!(name == expected || (expected == "failed" && name == "declined"), "{role:?} {} {:?}", state.name(), m.kind());
                    assert!(out.is_empty());
                } else {
                    assert_eq!(next.state, IssueState::Failed { code: PROTOCOL_ERROR.into() }, "{role:?} {} {:?}", state.name(), m.kind());
                    assert!(is_protocol_error(&out));
                }
                checked += 1;
            }
        }
    }
    for role in [PresentRole::Verifier, PresentRole::Holder] {
        for state in &s.present_states {
            let flow = PresentFlow { role, state: state.clone() };
            for m in &s.messages {
                let input = PresentInput::Receive(m.clone());
                let (next, out) = flow.step(input.clone());
                assert_eq!(flow.step(input), (next.clone(), out.clone()), "pure");
                if state.is_terminal() {
                    assert_eq!((&next, out.len()), (&flow, 0));
                } else if let Some(expected) = present_edge(role, state.name(), m.kind()) {
                    assert_eq!(next.state.name(), expected, "{role:?} {} {:?}", state.name(), m.kind());
                    assert!(out.is_empty());
                } else {
                    assert_eq!(next.state, PresentState::Failed { code: PROTOCOL_ERROR.into() }, "{role:?} {} {:?}", state.name(), m.kind());
                    assert!(is_protocol_error(&out));
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 2 * 7 * 9 + 2 * 6 * 9);
}

#[test]
fn illegal_local_inputs_fail_the_flow() {
    let s = samples();
    let (f, out) = IssueFlow::new(IssueRole::Holder).step(IssueInput::Offer(s.offer.clone()));
    assert_eq!(f.state.name(), "failed");
    assert!(is_protocol_error(&out));
    let (f, out) = IssueFlow::new(IssueRole::Issuer).step(IssueInput::Stored);
    assert_eq!(f.state.name(), "failed");
    assert!(is_protocol_error(&out));
    let (f, _) = PresentFlow::new(PresentRole::Holder).step(PresentInput::Verdict(Verdict::Reject(RejectReason::Malformed)));
    assert_eq!(f.state.name(), "failed");
}
