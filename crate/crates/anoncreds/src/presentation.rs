//! Presentation requests, zero-knowledge presentations and their checks.
//!
//! A presentation randomizes the signature as `A' = A S^rho`, so with
//! `v' = v - e*rho` the holder proves
//!
//! ```text
//! Z * prod_revealed R_i^{-m_i} * A'^{-2^336} = A'^{e - 2^336} * S^{v'} * prod_hidden R_i^{m_i}
//! ```
//!
//! Every constrained hidden attribute is also committed in the commitment
//! group as `C = g^m h^r`; range claims and allowed-value disjunctions are
//! made about `C`. The handle attribute is shared with the non-revocation
//! relations. All parts are bound to one Fiat-Shamir challenge.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use vaxpass_core::bigint::{pow2, pow_signed, random_bits, to_signed};
use vaxpass_core::range::{Direction, RangeClaim, RangeWitness};
use vaxpass_core::{
    canonical, CompoundProof, CryptoError, OrWitness, ProofBuilder, SecretId, Statement, SystemParams,
    Transcript, MESSAGE_BITS, SLACK_BITS,
};
use vaxpass_revocation::nonrevocation::{self, NonRevocationCommitments, NonRevocationSecrets};
use vaxpass_revocation::{PublicAccumulator, RevocationError, HANDLE_BITS};

use crate::issuance::Credential;
use crate::keys::{CredentialDefinition, E_BITS};
use crate::schema::CredentialSchema;
use crate::{AnonCredsError, Result};

/// Bit width of every predicate range proof.
pub const PREDICATE_WIDTH: u32 = 32;
pub const NONCE_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub attribute: String,
    pub op: Direction,
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllowedValues {
    pub attribute: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationRequest {
    pub request_id: String,
    #[serde(with = "vaxpass_core::serde_int::hex_bytes")]
    pub nonce: Vec<u8>,
    pub schema_id: String,
    #[serde(default)]
    pub revealed: Vec<String>,
    #[serde(default)]
    pub predicates: Vec<Predicate>,
    #[serde(default)]
    pub allowed: Vec<AllowedValues>,
    /// Seconds a presentation stays acceptable after the request is made.
    pub freshness_secs: u64,
}

impl PresentationRequest {
    pub fn new<R: RngCore + ?Sized>(request_id: &str, schema_id: &str, rng: &mut R) -> Self {
        let mut nonce = vec![0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        PresentationRequest {
            request_id: request_id.into(),
            nonce,
            schema_id: schema_id.into(),
            revealed: Vec::new(),
            predicates: Vec::new(),
            allowed: Vec::new(),
            freshness_secs: 300,
        }
    }

    pub fn reveal(mut self, attribute: &str) -> Self {
        self.revealed.push(attribute.into());
        self
    }

    pub fn predicate(mut self, attribute: &str, op: Direction, bound: i64) -> Self {
        self.predicates.push(Predicate {
            attribute: attribute.into(),
            op,
            bound,
        });
        self
    }

    pub fn allow(mut self, attribute: &str, values: &[&str]) -> Self {
        self.allowed.push(AllowedValues {
            attribute: attribute.into(),
            values: values.iter().map(|v| (*v).to_string()).collect(),
        });
        self
    }

    /// Structural checks against `schema`: known claims only, no
    /// constraint on a revealed or reserved attribute, order predicates
    /// only on ordered encodings, every allowed value encodable.
    pub fn validate(&self, schema: &CredentialSchema) -> Result<()> {
        let bad = |m: String| Err(AnonCredsError::InvalidRequest(m));
        if self.nonce.len() != NONCE_LEN {
            return bad("nonce must be 32 bytes".into());
        }
        if self.schema_id != schema.schema_id {
            return bad("schema mismatch".into());
        }
        let claim = |name: &str| {
            if schema.is_reserved(name) {
                return Err(AnonCredsError::InvalidRequest(format!("{name} is reserved")));
            }
            schema.claim(name)
        };
        let mut revealed = BTreeSet::new();
        for name in &self.revealed {
            claim(name)?;
            if !revealed.insert(name.as_str()) {
                return bad(format!("{name} revealed twice"));
            }
        }
        for p in &self.predicates {
            let spec = claim(&p.attribute)?;
            if !spec.encoding.is_ordered() {
                return bad(format!("{}: predicates need an ordered encoding", p.attribute));
            }
            if revealed.contains(p.attribute.as_str()) {
                return bad(format!("{}: predicate on a revealed attribute", p.attribute));
            }
        }
        for list in &self.allowed {
            claim(&list.attribute)?;
            if list.values.is_empty() {
                return bad(format!("{}: empty allowed list", list.attribute));
            }
            if revealed.contains(list.attribute.as_str()) {
                return bad(format!("{}: allowed list on a revealed attribute", list.attribute));
            }
            for v in &list.values {
                schema.encode(&list.attribute, v)?;
            }
        }
        Ok(())
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }
}

/// Encoded allowed values, sorted and deduplicated.
fn allowed_encodings(schema: &CredentialSchema, list: &AllowedValues) -> Result<Vec<BigInt>> {
    let set: BTreeSet<BigInt> = list
        .values
        .iter()
        .map(|v| schema.encode(&list.attribute, v))
        .collect::<Result<_>>()?;
    Ok(set.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateCommitment {
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub commitment: BigUint,
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub bits: Vec<BigUint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub request_id: String,
    #[serde(with = "vaxpass_core::serde_int::hex_bytes")]
    pub nonce: Vec<u8>,
    pub schema_id: String,
    pub cred_def_id: String,
    #[serde(with = "vaxpass_core::serde_int::biguint")]
    pub a_prime: BigUint,
    pub revealed: BTreeMap<String, String>,
    pub predicates: Vec<PredicateCommitment>,
    #[serde(with = "vaxpass_core::serde_int::biguint_vec")]
    pub memberships: Vec<BigUint>,
    pub rev_epoch: u64,
    pub non_revocation: NonRevocationCommitments,
    pub proof: CompoundProof,
}

impl Presentation {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    NonceMismatch,
    SchemaMismatch,
    UntrustedIssuer,
    Malformed,
    SignatureProof,
    PredicateFailed,
    SetMembershipFailed,
    NonRevocation,
    TranscriptMismatch,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::NonceMismatch => "NONCE_MISMATCH",
            RejectReason::SchemaMismatch => "SCHEMA_MISMATCH",
            RejectReason::UntrustedIssuer => "UNTRUSTED_ISSUER",
            RejectReason::Malformed => "MALFORMED",
            RejectReason::SignatureProof => "SIGNATURE_PROOF",
            RejectReason::PredicateFailed => "PREDICATE_FAILED",
            RejectReason::SetMembershipFailed => "SET_MEMBERSHIP_FAILED",
            RejectReason::NonRevocation => "NON_REVOCATION",
            RejectReason::TranscriptMismatch => "TRANSCRIPT_MISMATCH",
        }
    }

    fn from_label(label: &str) -> Self {
        match label.split('/').next() {
            Some("signature") => RejectReason::SignatureProof,
            Some("predicate") => RejectReason::PredicateFailed,
            Some("membership") => RejectReason::SetMembershipFailed,
            Some("nonrevocation") => RejectReason::NonRevocation,
            Some("challenge") => RejectReason::TranscriptMismatch,
            _ => RejectReason::Malformed,
        }
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn reason(&self) -> Option<RejectReason> {
        match self {
            Verdict::Accept => None,
            Verdict::Reject(r) => Some(*r),
        }
    }
}

struct Context<'a> {
    def: &'a CredentialDefinition,
    schema: &'a CredentialSchema,
    request: &'a PresentationRequest,
    acc: &'a PublicAccumulator,
}

struct PublicParts<'a> {
    a_prime: &'a BigUint,
    revealed: &'a BTreeMap<usize, BigInt>,
    predicates: &'a [PredicateCommitment],
    memberships: &'a [BigUint],
    non_revocation: &'a NonRevocationCommitments,
}

struct Witness {
    e_hat: BigInt,
    v: BigInt,
    values: Vec<BigInt>,
    predicates: Vec<RangeWitness>,
    memberships: Vec<(usize, BigUint)>,
    non_revocation: NonRevocationSecrets,
}

fn v_bits(def: &CredentialDefinition) -> u32 {
    def.public_key.modulus.bits() as u32 + SLACK_BITS + E_BITS + 1
}

fn malformed(what: &str) -> AnonCredsError {
    AnonCredsError::Crypto(CryptoError::Malformed(what.into()))
}

fn assemble(ctx: &Context<'_>, b: &mut ProofBuilder, p: &PublicParts<'_>, w: Option<&Witness>) -> Result<()> {
    let pk = &ctx.def.public_key;
    let n = &pk.modulus;
    let sys: &SystemParams = &ctx.def.commitment_params;
    let schema = ctx.schema;
    if pk.r.len() != schema.arity() {
        return Err(malformed("key arity"));
    }
    if p.a_prime.is_zero() || p.a_prime >= n {
        return Err(malformed("A'"));
    }

    let e_hat = b.secret(E_BITS - 1, w.map(|w| w.e_hat.clone()));
    let v = b.secret(v_bits(ctx.def), w.map(|w| w.v.clone()));
    let mut hidden: BTreeMap<usize, SecretId> = BTreeMap::new();
    for i in (0..schema.arity()).filter(|i| !p.revealed.contains_key(i)) {
        let bits = if i == schema.handle_index() {
            HANDLE_BITS as u32
        } else {
            MESSAGE_BITS
        };
        hidden.insert(i, b.secret(bits, w.map(|w| w.values[i].clone())));
    }

    let shift = -to_signed(&pow2(E_BITS - 1));
    let mut target = &pk.z * pow_signed(p.a_prime, &shift, n).ok_or_else(|| malformed("A' not invertible"))? % n;
    for (i, m) in p.revealed {
        target = target * pow_signed(&pk.r[*i], &-m, n).ok_or_else(|| malformed("R not invertible"))? % n;
    }
    let mut terms = vec![(p.a_prime.clone(), e_hat), (pk.s.clone(), v)];
    terms.extend(hidden.iter().map(|(i, id)| (pk.r[*i].clone(), *id)));
    b.relation("signature", n, target, terms);

    if p.predicates.len() != ctx.request.predicates.len() || p.memberships.len() != ctx.request.allowed.len() {
        return Err(malformed("sub-proof count"));
    }
    let rand_bits = sys.randomness_bits();
    for (j, (pred, pc)) in ctx.request.predicates.iter().zip(p.predicates).enumerate() {
        let idx = schema.index_of(&pred.attribute).ok_or_else(|| malformed("predicate attribute"))?;
        let m = *hidden.get(&idx).ok_or_else(|| malformed("predicate attribute"))?;
        if pc.commitment >= sys.modulus {
            return Err(malformed("predicate commitment"));
        }
        let rw = w.map(|w| &w.predicates[j]);
        let r = b.secret(rand_bits, rw.map(|rw| to_signed(&rw.randomness)));
        b.relation(
            format!("predicate/{j}/commitment"),
            &sys.modulus,
            pc.commitment.clone(),
            vec![(sys.g.clone(), m), (sys.h.clone(), r)],
        );
        let bound = BigInt::from(pred.bound);
        let claim = RangeClaim {
            params: sys,
            commitment: &pc.commitment,
            bound: &bound,
            direction: pred.op,
            width: PREDICATE_WIDTH,
        };
        claim.add_to(b, &format!("predicate/{j}"), &pc.bits, rw)?;
    }

    let g_inv = sys.g.modinv(&sys.modulus).ok_or_else(|| malformed("g"))?;
    for (j, (list, c)) in ctx.request.allowed.iter().zip(p.memberships).enumerate() {
        let idx = schema.index_of(&list.attribute).ok_or_else(|| malformed("list attribute"))?;
        let m = *hidden.get(&idx).ok_or_else(|| malformed("list attribute"))?;
        if *c >= sys.modulus {
            return Err(malformed("membership commitment"));
        }
        let opening = w.map(|w| &w.memberships[j]);
        let r = b.secret(rand_bits, opening.map(|(_, r)| to_signed(r)));
        b.relation(
            format!("membership/{j}/commitment"),
            &sys.modulus,
            c.clone(),
            vec![(sys.g.clone(), m), (sys.h.clone(), r)],
        );
        let clauses = allowed_encodings(schema, list)?
            .iter()
            .map(|value| {
                let shifted = c * pow_signed(&g_inv, value, &sys.modulus).expect("non-negative encodings") % &sys.modulus;
                let mut st = Statement::new();
                let rho = st.secret(rand_bits);
                st.relation(format!("membership/{j}/clause"), &sys.modulus, shifted, vec![(sys.h.clone(), rho)]);
                st
            })
            .collect();
        b.disjunction(
            format!("membership/{j}"),
            clauses,
            opening.map(|(live, r)| OrWitness {
                live: *live,
                witness: vec![to_signed(r)],
            }),
        );
    }

    let handle = hidden
        .get(&schema.handle_index())
        .copied()
        .ok_or_else(|| malformed("revocation handle revealed"))?;
    nonrevocation::add_relations(
        b,
        sys,
        ctx.acc,
        p.non_revocation,
        handle,
        HANDLE_BITS as u32,
        w.map(|w| &w.non_revocation),
    )?;
    Ok(())
}

fn transcript(ctx: &Context<'_>, p: &PublicParts<'_>) -> Transcript {
    let mut t = Transcript::new(b"vaxpass/presentation");
    t.absorb(b"request", &ctx.request.canonical_bytes());
    t.absorb(b"cred-def", ctx.def.cred_def_id.as_bytes());
    let n = &ctx.def.public_key.modulus;
    t.absorb_element(b"a-prime", p.a_prime, n);
    let sys = &ctx.def.commitment_params;
    for pc in p.predicates {
        t.absorb_element(b"predicate", &pc.commitment, &sys.modulus);
        for bit in &pc.bits {
            t.absorb_element(b"bit", bit, &sys.modulus);
        }
    }
    for c in p.memberships {
        t.absorb_element(b"membership", c, &sys.modulus);
    }
    nonrevocation::absorb(&mut t, ctx.acc, p.non_revocation);
    t
}

fn encode_revealed(
    schema: &CredentialSchema,
    revealed: &BTreeMap<String, String>,
) -> Result<BTreeMap<usize, BigInt>> {
    revealed
        .iter()
        .map(|(name, raw)| {
            let idx = schema.index_of(name).ok_or_else(|| AnonCredsError::UnknownAttribute(name.clone()))?;
            Ok((idx, schema.encode(name, raw)?))
        })
        .collect()
}

/// Build a presentation of `cred` for `request` against the current
/// accumulator.
pub fn build_presentation<R: RngCore + ?Sized>(
    cred: &Credential,
    schema: &CredentialSchema,
    def: &CredentialDefinition,
    request: &PresentationRequest,
    acc: &PublicAccumulator,
    rng: &mut R,
) -> Result<Presentation> {
    request.validate(schema)?;
    if cred.schema_id != request.schema_id || cred.cred_def_id != def.cred_def_id {
        return Err(AnonCredsError::CannotSatisfy("credential schema does not match the request".into()));
    }
    if cred.values.len() != schema.arity() {
        return Err(malformed("credential arity"));
    }
    let sys = &def.commitment_params;
    let value_of = |name: &str| -> Result<&BigInt> {
        let idx = schema.index_of(name).ok_or_else(|| AnonCredsError::UnknownAttribute(name.into()))?;
        Ok(&cred.values[idx])
    };

    let mut predicates = Vec::new();
    let mut predicate_witnesses = Vec::new();
    for p in &request.predicates {
        let m = value_of(&p.attribute)?;
        let bound = BigInt::from(p.bound);
        let r = random_bits(rng, u64::from(sys.randomness_bits()));
        let c = commit_signed(sys, m, &r)?;
        let claim = RangeClaim {
            params: sys,
            commitment: &c,
            bound: &bound,
            direction: p.op,
            width: PREDICATE_WIDTH,
        };
        if claim.delta(m).is_none() {
            let op = match p.op {
                Direction::AtLeast => ">=",
                Direction::AtMost => "<=",
            };
            return Err(AnonCredsError::CannotSatisfy(format!("{} {op} {}", p.attribute, p.bound)));
        }
        let (bits, rw) = claim.commit_bits(m, &r, rng)?;
        predicates.push(PredicateCommitment { commitment: c, bits });
        predicate_witnesses.push(rw);
    }

    let mut memberships = Vec::new();
    let mut membership_witnesses = Vec::new();
    for list in &request.allowed {
        let m = value_of(&list.attribute)?;
        let allowed = allowed_encodings(schema, list)?;
        let live = allowed
            .iter()
            .position(|v| v == m)
            .ok_or_else(|| AnonCredsError::CannotSatisfy(format!("{} not in the allowed list", list.attribute)))?;
        let r = random_bits(rng, u64::from(sys.randomness_bits()));
        memberships.push(commit_signed(sys, m, &r)?);
        membership_witnesses.push((live, r));
    }

    let (non_revocation, nr_secrets) =
        nonrevocation::commit(sys, acc, &cred.witness, rng).map_err(|e| match e {
            RevocationError::StaleWitness => AnonCredsError::StaleWitness,
            other => other.into(),
        })?;

    let pk = &def.public_key;
    let n = &pk.modulus;
    let rho = random_bits(rng, u64::from(n.bits() as u32 + SLACK_BITS));
    let a_prime = &cred.signature.a * pk.s.modpow(&rho, n) % n;
    let e = to_signed(&cred.signature.e);
    let witness = Witness {
        e_hat: &e - to_signed(&pow2(E_BITS - 1)),
        v: &cred.signature.v - &e * to_signed(&rho),
        values: cred.values.clone(),
        predicates: predicate_witnesses,
        memberships: membership_witnesses,
        non_revocation: nr_secrets,
    };

    let revealed: BTreeMap<String, String> = request
        .revealed
        .iter()
        .map(|name| {
            cred.raw
                .get(name)
                .cloned()
                .map(|raw| (name.clone(), raw))
                .ok_or_else(|| AnonCredsError::CannotSatisfy(format!("{name} has no raw value")))
        })
        .collect::<Result<_>>()?;
    let revealed_idx = encode_revealed(schema, &revealed)?;

    let ctx = Context {
        def,
        schema,
        request,
        acc,
    };
    let parts = PublicParts {
        a_prime: &a_prime,
        revealed: &revealed_idx,
        predicates: &predicates,
        memberships: &memberships,
        non_revocation: &non_revocation,
    };
    let mut builder = ProofBuilder::new();
    assemble(&ctx, &mut builder, &parts, Some(&witness))?;
    let proof = builder.prove(&transcript(&ctx, &parts), rng)?;
    Ok(Presentation {
        request_id: request.request_id.clone(),
        nonce: request.nonce.clone(),
        schema_id: request.schema_id.clone(),
        cred_def_id: def.cred_def_id.clone(),
        a_prime,
        revealed,
        predicates,
        memberships,
        rev_epoch: acc.epoch,
        non_revocation,
        proof,
    })
}

/// `g^m h^r` for a possibly negative `m`.
pub(crate) fn commit_signed(params: &SystemParams, m: &BigInt, r: &BigUint) -> Result<BigUint> {
    let n = &params.modulus;
    let gm = pow_signed(&params.g, m, n).ok_or_else(|| malformed("g not invertible"))?;
    Ok(gm * params.h.modpow(r, n) % n)
}

/// Check `pres` against `request`, the issuer's definition, the current
/// accumulator and the verifier's trusted issuer DIDs.
pub fn verify_presentation(
    def: &CredentialDefinition,
    schema: &CredentialSchema,
    request: &PresentationRequest,
    pres: &Presentation,
    acc: &PublicAccumulator,
    trusted: &[String],
) -> Verdict {
    use RejectReason::*;
    if pres.nonce != request.nonce || pres.request_id != request.request_id {
        return Verdict::Reject(NonceMismatch);
    }
    if pres.schema_id != request.schema_id
        || def.schema_id != request.schema_id
        || schema.schema_id != request.schema_id
        || pres.cred_def_id != def.cred_def_id
    {
        return Verdict::Reject(SchemaMismatch);
    }
    if !trusted.iter().any(|d| *d == def.issuer_did) {
        return Verdict::Reject(UntrustedIssuer);
    }
    if request.validate(schema).is_err() {
        return Verdict::Reject(Malformed);
    }
    let asked: BTreeSet<&String> = request.revealed.iter().collect();
    let given: BTreeSet<&String> = pres.revealed.keys().collect();
    if asked != given {
        return Verdict::Reject(Malformed);
    }
    let Ok(revealed) = encode_revealed(schema, &pres.revealed) else {
        return Verdict::Reject(Malformed);
    };
    if pres.rev_epoch != acc.epoch {
        return Verdict::Reject(NonRevocation);
    }
    let ctx = Context {
        def,
        schema,
        request,
        acc,
    };
    let parts = PublicParts {
        a_prime: &pres.a_prime,
        revealed: &revealed,
        predicates: &pres.predicates,
        memberships: &pres.memberships,
        non_revocation: &pres.non_revocation,
    };
    let mut builder = ProofBuilder::new();
    if assemble(&ctx, &mut builder, &parts, None).is_err() {
        return Verdict::Reject(Malformed);
    }
    match builder.verify(&pres.proof, &transcript(&ctx, &parts)) {
        Ok(()) => Verdict::Accept,
        Err(f) => Verdict::Reject(RejectReason::from_label(&f.label)),
    }
}
