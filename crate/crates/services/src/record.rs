use std::collections::BTreeMap;

use serde_json::Value;
use vaxpass_anoncreds::CredentialSchema;

use crate::{Result, ServiceError};

/// Check a vaccination record body against `schema` and return the raw
/// claim map. Every claim must be present and encodable; `dose` is an
/// integer of at least 1, given as a number or a decimal string.
pub fn parse_record(schema: &CredentialSchema, body: &Value) -> Result<BTreeMap<String, String>> {
    let obj = body
        .as_object()
        .ok_or_else(|| ServiceError::BadFormat("record must be a JSON object".into()))?;
    if let Some(extra) = obj.keys().find(|k| schema.claim(k).is_err()) {
        return Err(ServiceError::BadFormat(format!("unexpected field {extra}")));
    }
    let mut raw = BTreeMap::new();
    for claim in schema.claims() {
        let name = claim.name.as_str();
        let value = match obj.get(name) {
            None | Some(Value::Null) => return Err(ServiceError::MissingField(name.into())),
            Some(Value::String(s)) if s.trim().is_empty() => return Err(ServiceError::MissingField(name.into())),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) if name == "dose" => n.to_string(),
            Some(_) => return Err(ServiceError::BadFormat(format!("{name} must be a string"))),
        };
        if name == "dose" && !value.parse::<u64>().is_ok_and(|d| d >= 1) {
            return Err(ServiceError::BadFormat(format!("dose must be an integer >= 1, got {value}")));
        }
        schema
            .encode(name, &value)
            .map_err(|e| ServiceError::BadFormat(e.to_string()))?;
        raw.insert(name.to_string(), value);
    }
    Ok(raw)
}
