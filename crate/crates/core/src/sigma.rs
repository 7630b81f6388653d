//! Generic sigma protocols for discrete-log representation relations.
//!
//! A [`Statement`] is a list of relations `target = prod base_i^{x_i} mod n`
//! over declared secrets. Secrets shared between relations are proven
//! equal because they get a single response. Each secret declares a
//! magnitude bound `|x| < 2^bits`; announcement randomness is drawn from
//! `[0, 2^(bits + 256 + 80))` and responses `s = r + c*x` are computed over
//! the integers, which is what lets one secret span several moduli.
//!
//! Disjunctions use the standard simulation technique: dead clauses get a
//! random sub-challenge and simulated transcript, the live clause takes
//! whatever is left so that the sub-challenges sum to the Fiat-Shamir
//! challenge modulo `2^256`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bigint::{multi_pow, pow2, pow_signed, random_bits, to_signed};
use crate::transcript::Transcript;
use crate::{CryptoError, Result, CHALLENGE_BITS, SLACK_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SecretId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub label: String,
    pub modulus: BigUint,
    pub target: BigUint,
    pub terms: Vec<(BigUint, SecretId)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Statement {
    pub secret_bits: Vec<u32>,
    pub relations: Vec<Relation>,
}

impl Statement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn secret(&mut self, bits: u32) -> SecretId {
        self.secret_bits.push(bits);
        SecretId(self.secret_bits.len() - 1)
    }

    pub fn relation(
        &mut self,
        label: impl Into<String>,
        modulus: &BigUint,
        target: BigUint,
        terms: Vec<(BigUint, SecretId)>,
    ) {
        self.relations.push(Relation {
            label: label.into(),
            modulus: modulus.clone(),
            target,
            terms,
        });
    }

    fn validate(&self) -> Result<()> {
        for rel in &self.relations {
            if rel.modulus <= BigUint::one() {
                return Err(CryptoError::Malformed(format!("{}: modulus", rel.label)));
            }
            if rel.target >= rel.modulus || rel.terms.iter().any(|(b, _)| *b >= rel.modulus) {
                return Err(CryptoError::Malformed(format!("{}: unreduced element", rel.label)));
            }
            if rel.terms.iter().any(|(_, id)| id.0 >= self.secret_bits.len()) {
                return Err(CryptoError::Malformed(format!("{}: unknown secret", rel.label)));
            }
        }
        // a secret outside every relation would have an unbound response
        let mut used = vec![false; self.secret_bits.len()];
        for (_, id) in self.relations.iter().flat_map(|r| &r.terms) {
            used[id.0] = true;
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(CryptoError::Malformed(format!("secret {i} appears in no relation")));
        }
        Ok(())
    }

    /// Whether `witness` satisfies every relation and every declared bound.
    pub fn holds(&self, witness: &[BigInt]) -> bool {
        if witness.len() != self.secret_bits.len() {
            return false;
        }
        let in_bounds = witness
            .iter()
            .zip(&self.secret_bits)
            .all(|(x, &bits)| x.magnitude().bits() <= u64::from(bits));
        in_bounds
            && self.relations.iter().all(|rel| {
                let terms = rel.terms.iter().map(|(b, id)| (b, &witness[id.0]));
                multi_pow(terms, &rel.modulus).is_some_and(|v| v == rel.target)
            })
    }

    fn absorb(&self, t: &mut Transcript) {
        t.absorb(b"secrets", &(self.secret_bits.len() as u32).to_be_bytes());
        for bits in &self.secret_bits {
            t.absorb(b"bits", &bits.to_be_bytes());
        }
        for rel in &self.relations {
            t.absorb(b"relation", rel.label.as_bytes());
            t.absorb_uint(b"modulus", &rel.modulus);
            t.absorb_element(b"target", &rel.target, &rel.modulus);
            for (base, id) in &rel.terms {
                t.absorb_element(b"base", base, &rel.modulus);
                t.absorb(b"secret", &(id.0 as u32).to_be_bytes());
            }
        }
    }

    fn announce<R: RngCore + ?Sized>(&self, rng: &mut R) -> (Vec<BigInt>, Vec<BigUint>) {
        let nonces: Vec<BigInt> = self
            .secret_bits
            .iter()
            .map(|&bits| to_signed(&random_bits(rng, u64::from(nonce_bits(bits)))))
            .collect();
        let announcements = self
            .relations
            .iter()
            .map(|rel| {
                let terms = rel.terms.iter().map(|(b, id)| (b, &nonces[id.0]));
                multi_pow(terms, &rel.modulus).expect("non-negative exponents")
            })
            .collect();
        (nonces, announcements)
    }

    fn simulate<R: RngCore + ?Sized>(
        &self,
        challenge: &BigUint,
        rng: &mut R,
    ) -> Result<(Vec<BigUint>, Vec<BigInt>)> {
        let responses: Vec<BigInt> = self
            .secret_bits
            .iter()
            .map(|&bits| to_signed(&random_bits(rng, u64::from(nonce_bits(bits)))))
            .collect();
        let neg_c = -to_signed(challenge);
        let mut announcements = Vec::with_capacity(self.relations.len());
        for rel in &self.relations {
            let terms = rel.terms.iter().map(|(b, id)| (b, &responses[id.0]));
            let lhs = multi_pow(terms, &rel.modulus).expect("non-negative exponents");
            let t = pow_signed(&rel.target, &neg_c, &rel.modulus)
                .ok_or_else(|| CryptoError::Malformed(format!("{}: target not invertible", rel.label)))?;
            announcements.push(lhs * t % &rel.modulus);
        }
        Ok((announcements, responses))
    }

    /// Verification equations: `prod base^s == T * target^c` for every relation.
    /// Returns the label of the first failing relation.
    fn check(
        &self,
        announcements: &[BigUint],
        challenge: &BigUint,
        responses: &[BigInt],
    ) -> std::result::Result<(), String> {
        if announcements.len() != self.relations.len() || responses.len() != self.secret_bits.len() {
            return Err(self
                .relations
                .first()
                .map_or("structure".to_string(), |r| r.label.clone()));
        }
        for rel in &self.relations {
            let in_range = rel.terms.iter().all(|(_, id)| {
                responses[id.0].magnitude().bits() <= u64::from(response_bits(self.secret_bits[id.0]))
            });
            if !in_range {
                return Err(rel.label.clone());
            }
        }
        for (rel, t) in self.relations.iter().zip(announcements) {
            if *t >= rel.modulus {
                return Err(rel.label.clone());
            }
            let terms = rel.terms.iter().map(|(b, id)| (b, &responses[id.0]));
            let Some(lhs) = multi_pow(terms, &rel.modulus) else {
                return Err(rel.label.clone());
            };
            let rhs = t * rel.target.modpow(challenge, &rel.modulus) % &rel.modulus;
            if lhs != rhs {
                return Err(rel.label.clone());
            }
        }
        Ok(())
    }
}

fn nonce_bits(bits: u32) -> u32 {
    bits + CHALLENGE_BITS + SLACK_BITS
}

/// Largest admissible response bit length for a secret of `bits` bits.
pub fn response_bits(bits: u32) -> u32 {
    nonce_bits(bits) + 1
}

fn respond(nonces: &[BigInt], witness: &[BigInt], challenge: &BigUint) -> Vec<BigInt> {
    let c = to_signed(challenge);
    nonces.iter().zip(witness).map(|(r, x)| r + &c * x).collect()
}

fn challenge_modulus() -> BigUint {
    pow2(CHALLENGE_BITS)
}

/// Proof of a single conjunctive statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaProof {
    #[serde(with = "crate::serde_int::biguint_vec")]
    pub announcements: Vec<BigUint>,
    #[serde(with = "crate::serde_int::biguint")]
    pub challenge: BigUint,
    #[serde(with = "crate::serde_int::bigint_vec")]
    pub responses: Vec<BigInt>,
}

/// One branch of a disjunction. The proof carries no indication of which
/// branch was live.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseProof {
    #[serde(with = "crate::serde_int::biguint_vec")]
    pub announcements: Vec<BigUint>,
    #[serde(with = "crate::serde_int::biguint")]
    pub challenge: BigUint,
    #[serde(with = "crate::serde_int::bigint_vec")]
    pub responses: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrProof {
    #[serde(with = "crate::serde_int::biguint")]
    pub challenge: BigUint,
    pub clauses: Vec<ClauseProof>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrWitness {
    pub live: usize,
    pub witness: Vec<BigInt>,
}

/// A conjunction plus any number of disjunctions, all bound to one challenge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundProof {
    #[serde(with = "crate::serde_int::biguint")]
    pub challenge: BigUint,
    #[serde(with = "crate::serde_int::biguint_vec")]
    pub announcements: Vec<BigUint>,
    #[serde(with = "crate::serde_int::bigint_vec")]
    pub responses: Vec<BigInt>,
    pub disjunctions: Vec<Vec<ClauseProof>>,
}

/// Which check rejected a proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofFailure {
    pub label: String,
}

impl std::fmt::Display for ProofFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "proof check failed: {}", self.label)
    }
}

#[derive(Clone, Debug)]
struct Disjunction {
    label: String,
    clauses: Vec<Statement>,
    witness: Option<OrWitness>,
}

/// Assembles a compound statement shared by prover and verifier.
///
/// The prover passes secret values as it declares secrets; the verifier
/// passes `None` and builds the identical statement from public data.
#[derive(Clone, Debug, Default)]
pub struct ProofBuilder {
    conjunction: Statement,
    values: Vec<Option<BigInt>>,
    disjunctions: Vec<Disjunction>,
}

impl ProofBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn secret(&mut self, bits: u32, value: Option<BigInt>) -> SecretId {
        self.values.push(value);
        self.conjunction.secret(bits)
    }

    pub fn relation(
        &mut self,
        label: impl Into<String>,
        modulus: &BigUint,
        target: BigUint,
        terms: Vec<(BigUint, SecretId)>,
    ) {
        self.conjunction.relation(label, modulus, target, terms);
    }

    pub fn disjunction(
        &mut self,
        label: impl Into<String>,
        clauses: Vec<Statement>,
        witness: Option<OrWitness>,
    ) {
        self.disjunctions.push(Disjunction {
            label: label.into(),
            clauses,
            witness,
        });
    }

    pub fn statement(&self) -> &Statement {
        &self.conjunction
    }

    /// Clauses of every disjunction, in declaration order.
    pub fn disjunction_clauses(&self) -> impl Iterator<Item = &[Statement]> {
        self.disjunctions.iter().map(|d| d.clauses.as_slice())
    }

    /// The Fiat-Shamir challenge for the given announcements.
    pub fn fiat_shamir(
        &self,
        transcript: &Transcript,
        announcements: &[BigUint],
        disjunctions: &[Vec<ClauseProof>],
    ) -> BigUint {
        let mut t = transcript.clone();
        self.absorb_statement(&mut t);
        Self::absorb_announcements(&mut t, announcements, disjunctions);
        t.challenge()
    }

    fn absorb_statement(&self, t: &mut Transcript) {
        t.absorb(b"conjunction", b"");
        self.conjunction.absorb(t);
        for d in &self.disjunctions {
            t.absorb(b"disjunction", d.label.as_bytes());
            t.absorb(b"clauses", &(d.clauses.len() as u32).to_be_bytes());
            for clause in &d.clauses {
                clause.absorb(t);
            }
        }
    }

    fn absorb_announcements(t: &mut Transcript, conj: &[BigUint], disj: &[Vec<ClauseProof>]) {
        for a in conj {
            t.absorb_uint(b"announcement", a);
        }
        for clauses in disj {
            for clause in clauses {
                for a in &clause.announcements {
                    t.absorb_uint(b"announcement", a);
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        self.conjunction.validate()?;
        for d in &self.disjunctions {
            if d.clauses.is_empty() {
                return Err(CryptoError::Malformed(format!("{}: empty disjunction", d.label)));
            }
            for clause in &d.clauses {
                clause.validate()?;
            }
        }
        Ok(())
    }

    /// Produce the proof. Refuses with `WitnessMismatch` when any relation
    /// or the live clause of any disjunction is not satisfied.
    pub fn prove<R: RngCore + ?Sized>(
        &self,
        transcript: &Transcript,
        rng: &mut R,
    ) -> Result<CompoundProof> {
        self.validate()?;
        let witness: Vec<BigInt> = self
            .values
            .iter()
            .map(|v| v.clone().ok_or(CryptoError::WitnessMismatch))
            .collect::<Result<_>>()?;
        if !self.conjunction.holds(&witness) {
            return Err(CryptoError::WitnessMismatch);
        }

        let (nonces, announcements) = self.conjunction.announce(rng);

        // Disjunctions: simulate dead clauses now, keep live nonces for later.
        let modulus = challenge_modulus();
        let mut pending = Vec::with_capacity(self.disjunctions.len());
        let mut disjunction_proofs = Vec::with_capacity(self.disjunctions.len());
        for d in &self.disjunctions {
            let w = d.witness.as_ref().ok_or(CryptoError::WitnessMismatch)?;
            let live = d.clauses.get(w.live).ok_or(CryptoError::WitnessMismatch)?;
            if !live.holds(&w.witness) {
                return Err(CryptoError::WitnessMismatch);
            }
            let mut clauses = Vec::with_capacity(d.clauses.len());
            let mut live_nonces = Vec::new();
            for (i, clause) in d.clauses.iter().enumerate() {
                if i == w.live {
                    let (n, a) = clause.announce(rng);
                    live_nonces = n;
                    clauses.push(ClauseProof {
                        announcements: a,
                        challenge: BigUint::zero(),
                        responses: Vec::new(),
                    });
                } else {
                    let c = random_bits(rng, u64::from(CHALLENGE_BITS));
                    let (a, s) = clause.simulate(&c, rng)?;
                    clauses.push(ClauseProof {
                        announcements: a,
                        challenge: c,
                        responses: s,
                    });
                }
            }
            pending.push(live_nonces);
            disjunction_proofs.push(clauses);
        }

        let challenge = self.fiat_shamir(transcript, &announcements, &disjunction_proofs);

        let responses = respond(&nonces, &witness, &challenge);
        for ((d, clauses), nonces) in self
            .disjunctions
            .iter()
            .zip(disjunction_proofs.iter_mut())
            .zip(pending)
        {
            let w = d.witness.as_ref().expect("checked above");
            let others = clauses
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != w.live)
                .fold(BigUint::zero(), |acc, (_, c)| acc + &c.challenge);
            let live_c = (&challenge + &modulus - others % &modulus) % &modulus;
            clauses[w.live].responses = respond(&nonces, &w.witness, &live_c);
            clauses[w.live].challenge = live_c;
        }

        Ok(CompoundProof {
            challenge,
            announcements,
            responses,
            disjunctions: disjunction_proofs,
        })
    }

    /// Check `proof`; on rejection report the first failing relation,
    /// disjunction, or `"challenge"` for a Fiat-Shamir mismatch.
    pub fn verify(
        &self,
        proof: &CompoundProof,
        transcript: &Transcript,
    ) -> std::result::Result<(), ProofFailure> {
        let fail = |label: &str| ProofFailure {
            label: label.to_string(),
        };
        if self.validate().is_err() || proof.disjunctions.len() != self.disjunctions.len() {
            return Err(fail("structure"));
        }
        let modulus = challenge_modulus();
        if proof.challenge >= modulus {
            return Err(fail("challenge"));
        }
        self.conjunction
            .check(&proof.announcements, &proof.challenge, &proof.responses)
            .map_err(|l| fail(&l))?;
        for (d, clauses) in self.disjunctions.iter().zip(&proof.disjunctions) {
            if clauses.len() != d.clauses.len() || clauses.iter().any(|c| c.challenge >= modulus) {
                return Err(fail(&d.label));
            }
            let sum = clauses
                .iter()
                .fold(BigUint::zero(), |acc, c| acc + &c.challenge)
                % &modulus;
            if sum != proof.challenge {
                return Err(fail(&d.label));
            }
            for (stmt, c) in d.clauses.iter().zip(clauses) {
                stmt.check(&c.announcements, &c.challenge, &c.responses)
                    .map_err(|_| fail(&d.label))?;
            }
        }
        if self.fiat_shamir(transcript, &proof.announcements, &proof.disjunctions) != proof.challenge {
            return Err(fail("challenge"));
        }
        Ok(())
    }
}

fn builder_for(statement: &Statement, witness: Option<&[BigInt]>) -> ProofBuilder {
    ProofBuilder {
        conjunction: statement.clone(),
        values: match witness {
            Some(w) if w.len() == statement.secret_bits.len() => w.iter().cloned().map(Some).collect(),
            _ => vec![None; statement.secret_bits.len()],
        },
        disjunctions: Vec::new(),
    }
}

/// Prove knowledge of a witness for `statement`.
pub fn sigma_prove<R: RngCore + ?Sized>(
    statement: &Statement,
    witness: &[BigInt],
    transcript: &Transcript,
    rng: &mut R,
) -> Result<SigmaProof> {
    let proof = builder_for(statement, Some(witness)).prove(transcript, rng)?;
    Ok(SigmaProof {
        announcements: proof.announcements,
        challenge: proof.challenge,
        responses: proof.responses,
    })
}

pub fn sigma_verify(statement: &Statement, proof: &SigmaProof, transcript: &Transcript) -> bool {
    let compound = CompoundProof {
        challenge: proof.challenge.clone(),
        announcements: proof.announcements.clone(),
        responses: proof.responses.clone(),
        disjunctions: Vec::new(),
    };
    builder_for(statement, None).verify(&compound, transcript).is_ok()
}

/// Prove that clause `live` of `clauses` holds, without revealing which.
pub fn or_prove<R: RngCore + ?Sized>(
    clauses: &[Statement],
    live: usize,
    witness: &[BigInt],
    transcript: &Transcript,
    rng: &mut R,
) -> Result<OrProof> {
    let mut b = ProofBuilder::new();
    b.disjunction(
        "or",
        clauses.to_vec(),
        Some(OrWitness {
            live,
            witness: witness.to_vec(),
        }),
    );
    let mut proof = b.prove(transcript, rng)?;
    Ok(OrProof {
        challenge: proof.challenge,
        clauses: proof.disjunctions.pop().expect("one disjunction"),
    })
}

pub fn or_verify(clauses: &[Statement], proof: &OrProof, transcript: &Transcript) -> bool {
    let mut b = ProofBuilder::new();
    b.disjunction("or", clauses.to_vec(), None);
    let compound = CompoundProof {
        challenge: proof.challenge.clone(),
        announcements: Vec::new(),
        responses: Vec::new(),
        disjunctions: vec![proof.clauses.clone()],
    };
    b.verify(&compound, transcript).is_ok()
}
