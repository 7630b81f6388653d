use std::collections::HashMap;
use std::time::{Duration, Instant};

use vaxpass_agent::Did;
use vaxpass_ledger::{api, LedgerApi};

use crate::Result;

/// Cached answers to "is this DID on the ledger trust list". Entries
/// older than `freshness` are re-queried; every answer is
/// inclusion-checked against the pinned genesis.
#[derive(Debug)]
pub struct TrustCache {
    pub genesis: [u8; 32],
    pub freshness: Duration,
    entries: HashMap<Did, (bool, Instant)>,
}

impl TrustCache {
    pub fn new(genesis: [u8; 32], freshness: Duration) -> TrustCache {
        TrustCache {
            genesis,
            freshness,
            entries: HashMap::new(),
        }
    }

    pub async fn check(&mut self, ledger: &dyn LedgerApi, did: &Did) -> Result<bool> {
        if let Some((trusted, at)) = self.entries.get(did) {
            if at.elapsed() < self.freshness {
                return Ok(*trusted);
            }
        }
        let trusted = api::is_trusted(ledger, &self.genesis, did).await?;
        self.entries.insert(did.clone(), (trusted, Instant::now()));
        Ok(trusted)
    }
}

/// Uncached trust-list membership.
pub async fn trust_check(ledger: &dyn LedgerApi, genesis: &[u8; 32], did: &Did) -> Result<bool> {
    Ok(api::is_trusted(ledger, genesis, did).await?)
}
