//! Service configuration: one canonical JSON file per service, with any
//! top-level key overridable by `VAXPASS_<KEY>` in the environment.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vaxpass_core::SecurityProfile;

use crate::{Result, ServiceError};

pub const ENV_PREFIX: &str = "VAXPASS_";

/// Shared by the issuer and the verifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// Socket address to bind.
    pub listen: String,
    /// Base URL peers use to reach this service.
    pub public_url: String,
    /// Ledger node URLs; requests go to the first.
    pub ledger: Vec<String>,
    /// Hex hash of the genesis block.
    pub genesis_hash: String,
    /// Service state file (keys, registry, identity).
    pub state: PathBuf,
    #[serde(default = "default_profile")]
    pub profile: SecurityProfile,
    /// Trust cache lifetime in seconds.
    #[serde(default = "default_freshness")]
    pub trust_freshness_secs: u64,
}

fn default_profile() -> SecurityProfile {
    SecurityProfile::Test
}

fn default_freshness() -> u64 {
    60
}

/// Apply `VAXPASS_<KEY>` overrides to the keys of `obj` and of
/// `known`. Values parse as JSON when they can; array fields also accept
/// a comma-separated list.
pub fn apply_env<I>(obj: &mut Map<String, Value>, known: &[&str], env: I)
where
    I: IntoIterator<Item = (String, String)>,
{
    for (k, raw) in env {
        let Some(name) = k.strip_prefix(ENV_PREFIX) else { continue };
        let key = name.to_ascii_lowercase();
        if !known.contains(&key.as_str()) && !obj.contains_key(&key) {
            continue;
        }
        let is_array = obj.get(&key).is_some_and(Value::is_array);
        let value = match serde_json::from_str::<Value>(&raw) {
            Ok(v) if !is_array || v.is_array() => v,
            _ if is_array => Value::Array(
                raw.split(',')
                    .map(|s| Value::String(s.trim().to_string()))
                    .filter(|v| v.as_str() != Some(""))
                    .collect(),
            ),
            _ => Value::String(raw),
        };
        obj.insert(key, value);
    }
}

/// Read `path` (if given), apply environment overrides for `known` keys
/// and deserialize.
pub fn load<T: DeserializeOwned>(path: Option<&Path>, known: &[&str]) -> Result<T> {
    let mut obj = match path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?;
            match serde_json::from_slice(&bytes) {
                Ok(Value::Object(m)) => m,
                _ => return Err(ServiceError::Config(format!("{}: expected a JSON object", p.display()))),
            }
        }
        None => Map::new(),
    };
    apply_env(&mut obj, known, std::env::vars());
    serde_json::from_value(Value::Object(obj)).map_err(|e| ServiceError::Config(e.to_string()))
}

pub const SERVICE_KEYS: &[&str] = &[
    "listen",
    "public_url",
    "ledger",
    "genesis_hash",
    "state",
    "profile",
    "trust_freshness_secs",
];

impl ServiceConfig {
    pub fn load(path: Option<&Path>) -> Result<ServiceConfig> {
        load(path, SERVICE_KEYS)
    }
}
