#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::RngCore;
use vaxpass_anoncreds::{
    complete_credential, issue_credential, issuer_keygen, request_issuance, Credential,
    CredentialSchema, IssuerKeyPair, LinkSecret,
};
use vaxpass_core::SecurityProfile;
use vaxpass_revocation::{AccumulatorState, RegistryParams};

pub const ISSUER: &str = "did:vax:issuer";

pub struct Fixture {
    pub schema: CredentialSchema,
    pub keys: IssuerKeyPair,
    pub registry: AccumulatorState,
    pub link: LinkSecret,
    pub serial: u64,
}

impl Fixture {
    pub fn new<R: RngCore>(profile: SecurityProfile, rng: &mut R) -> Self {
        let schema = CredentialSchema::vaccination();
        let keys = issuer_keygen(profile, &schema, ISSUER, rng).unwrap();
        let registry = AccumulatorState::with_params(RegistryParams::generate(profile, rng).unwrap());
        Fixture {
            schema,
            keys,
            registry,
            link: LinkSecret::generate(rng),
            serial: 0,
        }
    }

    pub fn issue<R: RngCore>(&mut self, raw: &BTreeMap<String, String>, rng: &mut R) -> Credential {
        let nonce = [7u8; 32];
        let def = self.keys.public().clone();
        let (blinding, req) = request_issuance(&self.link, &def, &nonce, rng).unwrap();
        self.serial += 1;
        let serial = format!("serial-{}-{}", self.serial, rng.next_u64());
        let (partial, _) = issue_credential(
            &self.keys,
            &self.schema,
            &mut self.registry,
            raw,
            &req,
            &nonce,
            &serial,
            rng,
        )
        .unwrap();
        complete_credential(partial, &blinding, &self.link, &self.schema, &def).unwrap()
    }

    /// Bring a credential's witness up to the current registry state.
    pub fn refresh(&self, cred: &mut Credential) {
        cred.witness = self.registry.witness_for(&cred.witness.prime).unwrap();
    }
}

pub fn record(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn alice() -> BTreeMap<String, String> {
    record(&[
        ("full_name", "Alice Example"),
        ("birth_date", "1984-06-02"),
        ("pathogen", "SARS-CoV-2"),
        ("laboratory", "LabX"),
        ("dose", "2"),
        ("vaccination_date", "2021-05-20"),
        ("location", "Valencia"),
    ])
}

