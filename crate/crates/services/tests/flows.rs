mod common;

use common::*;
use serde_json::json;
use vaxpass_agent::Inbound;
use vaxpass_anoncreds::CredentialSchema;
use vaxpass_core::SecurityProfile;
use vaxpass_ledger::{api, LedgerApi};
use vaxpass_services::issuer::IssuanceStatus;
use vaxpass_services::peer::Exchange;
use vaxpass_services::registry_id;
use vaxpass_services::trust::trust_check;
use vaxpass_services::verifier::ProofStatus;
use vaxpass_services::wallet::{Decision, Event};

fn dose_at_least(n: i64) -> serde_json::Value {
    json!({
        "revealed": ["laboratory", "pathogen"],
        "predicates": [{"attribute": "dose", "op": ">=", "bound": n}]
    })
}

#[tokio::test]
async fn issue_then_verify_dose_one() {
    let mut w = World::new(SecurityProfile::Test).await;
    let record = record(2);
    let (issuance, cred) = w.issue(&record).await;
    assert_eq!(w.issuer.status(&issuance).await.unwrap().status, IssuanceStatus::Accepted);
    let list = w.wallet.list();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0].id, cred);
    assert_eq!(list[0].values["dose"], "2");
    assert!(!list[0].revoked);

    let (req, item) = w.request(dose_at_least(1)).await;
    assert_eq!(w.verifier.status(&req).await.unwrap().status, ProofStatus::Pending);
    let events = w
        .wallet
        .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
        .await
        .unwrap();
    assert!(matches!(events.last(), Some(Event::Verified { .. })), "{events:?}");
    let view = w.verifier.status(&req).await.unwrap();
    assert_eq!(view.status, ProofStatus::Verified);
    let revealed = view.revealed.unwrap();
    assert_eq!(revealed.len(), 2);
    for (k, v) in &revealed {
        assert_eq!(v.as_str(), record[k].as_str().unwrap());
    }
    assert!(w.wallet.pending().is_empty());
}

#[tokio::test]
async fn unsatisfiable_request_is_declined() {
    let mut w = World::new(SecurityProfile::Test).await;
    w.issue(&record(2)).await;
    let (req, item) = w.request(dose_at_least(3)).await;
    let err = w
        .wallet
        .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
        .await
        .unwrap_err();
    assert_eq!(err.code(), "CANNOT_SATISFY");
    let view = w.verifier.status(&req).await.unwrap();
    assert_eq!(view.status, ProofStatus::Declined);
    assert_eq!(view.reason.as_deref(), Some("CANNOT_SATISFY"));
    assert!(w.wallet.pending().is_empty());
}

#[tokio::test]
async fn hidden_laboratory_behind_allowed_list() {
    let mut w = World::new(SecurityProfile::Test).await;
    w.issue(&record(2)).await;
    let (req, item) = w
        .request(json!({"allowed": [{"attribute": "laboratory", "values": ["LabX", "LabY"]}]}))
        .await;
    w.wallet
        .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
        .await
        .unwrap();
    let view = w.verifier.status(&req).await.unwrap();
    assert_eq!(view.status, ProofStatus::Verified);
    assert!(view.revealed.unwrap().is_empty());

    let stored = w.verifier.record(&req).await.unwrap();
    let enc = CredentialSchema::vaccination().encode("laboratory", "LabX").unwrap();
    let (_, mag) = enc.to_bytes_be();
    for needle in [enc.to_string(), hex::encode(&mag), enc.to_str_radix(16)] {
        assert!(
            !String::from_utf8_lossy(&stored).contains(&needle),
            "verifier record holds the laboratory encoding"
        );
    }
}

#[tokio::test]
async fn declined_offer_and_connection() {
    let mut w = World::new(SecurityProfile::Test).await;
    let created = w.issuer.create(&record(1)).await.unwrap();

    let err = w.wallet.connect(&created.qr, false, &w.net).await.unwrap_err();
    assert_eq!(err.code(), "DECLINED");
    assert!(w.wallet.connections().is_empty());
    assert!(w.net.sent.lock().unwrap().is_empty());

    let truncated = &created.qr[..created.qr.len() / 2];
    assert_eq!(w.wallet.connect(truncated, true, &w.net).await.unwrap_err().code(), "BAD_PAYLOAD");

    let c = w.wallet.connect(&created.qr, true, &w.net).await.unwrap();
    assert_eq!(w.wallet.connections().len(), 1);
    let [Event::Offer { item }] = c.events[..] else { panic!() };
    let events = w
        .wallet
        .respond(item, Decision::Decline, &w.net, w.ledger.as_ref())
        .await
        .unwrap();
    assert_eq!(events, vec![Event::Declined { item, code: "DECLINED".into() }]);
    let st = w.issuer.status(&created.issuance_id).await.unwrap();
    assert_eq!(st.status, IssuanceStatus::Declined);
    assert!(w.wallet.list().is_empty());
    assert_eq!(
        w.wallet
            .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
            .await
            .unwrap_err()
            .code(),
        "UNKNOWN_ITEM"
    );
}

#[tokio::test]
async fn revoked_credential_is_flagged_and_rejected() {
    let mut w = World::new(SecurityProfile::Test).await;
    let (issuance, cred) = w.issue(&record(2)).await;
    let (_, other) = w.issue(&record(1)).await;

    let report = w.wallet.sync(w.ledger.as_ref()).await.unwrap();
    assert_eq!(report.updated, vec![cred.clone()]);
    assert_eq!(report.unchanged, vec![other.clone()]);
    let report = w.wallet.sync(w.ledger.as_ref()).await.unwrap();
    assert!(report.updated.is_empty() && report.revoked.is_empty());

    let before = w.wallet.data.credentials[&cred].credential.witness.clone();
    assert_eq!(w.issuer.revoke(&issuance).await.unwrap().status, IssuanceStatus::Revoked);
    let report = w.wallet.sync(w.ledger.as_ref()).await.unwrap();
    assert_eq!(report.revoked, vec![cred.clone()]);
    assert_eq!(report.updated, vec![other.clone()]);
    let list = w.wallet.list();
    assert!(list.iter().find(|c| c.id == cred).unwrap().revoked);
    assert!(!list.iter().find(|c| c.id == other).unwrap().revoked);

    // presenting with the pre-revocation witness against the epoch it was
    // valid for
    let (req, item) = w.request(dose_at_least(2)).await;
    let request = w.verifier.request(&req).await.unwrap();
    let rev_reg = registry_id(&w.issuer.cred_def_id().await);
    let old = api::accumulator(w.ledger.as_ref(), &w.genesis, &rev_reg, Some(before.epoch))
        .await
        .unwrap();
    w.wallet.data.credentials.get_mut(&cred).unwrap().credential.witness = before;
    let pres = w.wallet.present(&cred, &request, &old).unwrap();
    let events = w.wallet.respond_with(item, pres, &w.net).await.unwrap();
    assert_eq!(
        events.last(),
        Some(&Event::Failed { item, code: "NON_REVOCATION".into() })
    );
    let view = w.verifier.status(&req).await.unwrap();
    assert_eq!((view.status, view.reason.as_deref()), (ProofStatus::Failed, Some("NON_REVOCATION")));

    // the wallet itself refuses: the only 2-dose credential is revoked
    let (req, item) = w.request(dose_at_least(2)).await;
    let err = w
        .wallet
        .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
        .await
        .unwrap_err();
    assert_eq!(err.code(), "CANNOT_SATISFY");
    assert_eq!(w.verifier.status(&req).await.unwrap().status, ProofStatus::Declined);

    // the other credential still presents after picking up the revocation
    let (req, item) = w.request(dose_at_least(1)).await;
    w.wallet
        .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
        .await
        .unwrap();
    assert_eq!(w.verifier.status(&req).await.unwrap().status, ProofStatus::Verified);
}

#[tokio::test]
async fn untrusted_issuer_is_rejected() {
    let mut w = World::new(SecurityProfile::Test).await;
    w.issue(&record(2)).await;
    let did = w.issuer.did().await;
    assert!(trust_check(w.ledger.as_ref(), &w.genesis, &did).await.unwrap());

    // a self-registered DID never makes it onto the list
    let rogue = vaxpass_agent::Identity::generate("inproc://rogue", &mut rand::rngs::OsRng);
    w.ledger
        .submit(authority_tx(&rogue, vaxpass_ledger::TxKind::DidDoc, &rogue.document()))
        .await
        .unwrap();
    assert!(!trust_check(w.ledger.as_ref(), &w.genesis, &rogue.did()).await.unwrap());

    set_trust(w.ledger.as_ref(), &w.authority, did.clone(), false).await;
    assert!(w.ledger.trust_list().await.unwrap().dids.is_empty());
    assert!(!trust_check(w.ledger.as_ref(), &w.genesis, &did).await.unwrap());

    let (req, item) = w.request(dose_at_least(1)).await;
    let events = w
        .wallet
        .respond(item, Decision::Accept, &w.net, w.ledger.as_ref())
        .await
        .unwrap();
    assert_eq!(events.last(), Some(&Event::Failed { item, code: "UNTRUSTED_ISSUER".into() }));
    let view = w.verifier.status(&req).await.unwrap();
    assert_eq!(view.reason.as_deref(), Some("UNTRUSTED_ISSUER"));
}

#[tokio::test]
async fn replayed_presentation_and_envelope() {
    let mut w = World::new(SecurityProfile::Test).await;
    let (_, cred) = w.issue(&record(2)).await;
    let rev_reg = registry_id(&w.issuer.cred_def_id().await);

    let (req1, item1) = w.request(dose_at_least(1)).await;
    let request1 = w.verifier.request(&req1).await.unwrap();
    let acc = api::accumulator(w.ledger.as_ref(), &w.genesis, &rev_reg, None).await.unwrap();
    let captured = w.wallet.present(&cred, &request1, &acc).unwrap();
    w.net.sent.lock().unwrap().clear();
    w.wallet.respond_with(item1, captured.clone(), &w.net).await.unwrap();
    assert_eq!(w.verifier.status(&req1).await.unwrap().status, ProofStatus::Verified);

    // the same envelope delivered a second time
    let (endpoint, envelope) = w.net.sent.lock().unwrap()[0].clone();
    assert!(matches!(envelope, Inbound::Envelope(_)));
    let err = w.net.inner.send(&endpoint, &envelope).await.unwrap_err();
    assert_eq!(err.code(), "REPLAY");

    // the captured presentation against a fresh request
    let (req2, item2) = w.request(dose_at_least(1)).await;
    let events = w.wallet.respond_with(item2, captured, &w.net).await.unwrap();
    assert_eq!(events.last(), Some(&Event::Failed { item: item2, code: "NONCE_MISMATCH".into() }));
    let view = w.verifier.status(&req2).await.unwrap();
    assert_eq!((view.status, view.reason.as_deref()), (ProofStatus::Failed, Some("NONCE_MISMATCH")));
    assert_ne!(
        w.verifier.request(&req2).await.unwrap().nonce,
        request1.nonce,
        "every request gets a fresh nonce"
    );
}

#[tokio::test]
async fn templates_are_checked() {
    let w = World::new(SecurityProfile::ToyFixed).await;
    let bad = |t: serde_json::Value| {
        let v = w.verifier.clone();
        async move { v.create(serde_json::from_value(t).unwrap()).await.unwrap_err().code().to_string() }
    };
    assert_eq!(bad(json!({"revealed": ["link_secret"]})).await, "BAD_TEMPLATE");
    assert_eq!(
        bad(json!({"predicates": [{"attribute": "link_secret", "op": ">=", "bound": 0}]})).await,
        "BAD_TEMPLATE"
    );
    assert_eq!(bad(json!({})).await, "BAD_TEMPLATE");
    assert_eq!(bad(json!({"revealed": ["blood_type"]})).await, "BAD_TEMPLATE");
    assert_eq!(
        bad(json!({"predicates": [{"attribute": "dose", "op": ">", "bound": 1}]})).await,
        "BAD_TEMPLATE"
    );
    assert_eq!(
        bad(json!({"revealed": ["dose"], "predicates": [{"attribute": "dose", "op": ">=", "bound": 1}]})).await,
        "BAD_TEMPLATE"
    );
    let ok = w
        .verifier
        .create(
            serde_json::from_value(json!({
                "predicates": [{"attribute": "vaccination_date", "op": ">=", "bound": "2021-01-01"}]
            }))
            .unwrap(),
        )
        .await
        .unwrap();
    let req = w.verifier.request(&ok.request_id).await.unwrap();
    assert_eq!(req.predicates[0].bound, 18628);
    assert_eq!(w.verifier.status("nope").await.unwrap_err().code(), "NOT_FOUND");
}

#[tokio::test]
async fn records_are_checked_and_dropped() {
    let w = World::new(SecurityProfile::ToyFixed).await;
    let mut r = record(0);
    assert_eq!(w.issuer.create(&r).await.unwrap_err().code(), "BAD_FORMAT");
    r["dose"] = json!(1);
    r.as_object_mut().unwrap().remove("laboratory");
    assert_eq!(w.issuer.create(&r).await.unwrap_err().code(), "MISSING_FIELD");
    assert_eq!(w.issuer.status("nope").await.unwrap_err().code(), "NOT_FOUND");
    let c = w.issuer.create(&record(1)).await.unwrap();
    assert_eq!(w.issuer.status(&c.issuance_id).await.unwrap().status, IssuanceStatus::Pending);
}
