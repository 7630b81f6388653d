#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::OsRng;
use vaxpass_agent::CredentialOffer;
use vaxpass_anoncreds::{
    build_presentation, complete_credential, issue_credential, issuer_keygen, request_issuance, Credential,
    CredentialSchema, HolderBlinding, IssuanceRequest, IssuerKeyPair, LinkSecret, PartialCredential, Presentation,
    PresentationRequest,
};
use vaxpass_core::SecurityProfile;
use vaxpass_revocation::{AccumulatorState, RegistryParams};

/// Toy-profile issuer, holder and registry.
pub struct World {
    pub schema: CredentialSchema,
    pub keys: IssuerKeyPair,
    pub registry: AccumulatorState,
    pub link: LinkSecret,
}

pub fn record() -> BTreeMap<String, String> {
    [
        ("full_name", "Alice Example"),
        ("birth_date", "1984-06-02"),
        ("pathogen", "SARS-CoV-2"),
        ("laboratory", "LabX"),
        ("dose", "2"),
        ("vaccination_date", "2021-05-20"),
        ("location", "Valencia"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl World {
    pub fn new() -> World {
        let schema = CredentialSchema::vaccination();
        let keys = issuer_keygen(SecurityProfile::ToyFixed, &schema, "did:vax:issuer", &mut OsRng).unwrap();
        let registry = AccumulatorState::with_params(RegistryParams::generate(SecurityProfile::ToyFixed, &mut OsRng).unwrap());
        World {
            schema,
            keys,
            registry,
            link: LinkSecret::generate(&mut OsRng),
        }
    }

    pub fn offer(&self) -> CredentialOffer {
        CredentialOffer {
            cred_def_id: self.keys.public().cred_def_id.clone(),
            schema_id: self.schema.schema_id.clone(),
            nonce: [5u8; 32],
            preview: record(),
        }
    }

    pub fn request(&self, offer: &CredentialOffer) -> (HolderBlinding, IssuanceRequest) {
        request_issuance(&self.link, self.keys.public(), &offer.nonce, &mut OsRng).unwrap()
    }

    pub fn issue(&mut self, offer: &CredentialOffer, req: &IssuanceRequest, serial: &str) -> PartialCredential {
        issue_credential(
            &self.keys,
            &self.schema,
            &mut self.registry,
            &offer.preview,
            req,
            &offer.nonce,
            serial,
            &mut OsRng,
        )
        .unwrap()
        .0
    }

    pub fn complete(&self, partial: PartialCredential, blinding: &HolderBlinding) -> Credential {
        complete_credential(partial, blinding, &self.link, &self.schema, self.keys.public()).unwrap()
    }

    pub fn credential(&mut self, serial: &str) -> Credential {
        let offer = self.offer();
        let (blinding, req) = self.request(&offer);
        let partial = self.issue(&offer, &req, serial);
        self.complete(partial, &blinding)
    }

    pub fn present(&self, cred: &Credential, req: &PresentationRequest) -> vaxpass_anoncreds::Result<Presentation> {
        build_presentation(cred, &self.schema, self.keys.public(), req, &self.registry.public(), &mut OsRng)
    }
}
