//! Credential schemas and attribute encodings.

use chrono::NaiveDate;
use num_bigint::{BigInt, Sign};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{AnonCredsError, Result};

pub const LINK_SECRET: &str = "link_secret";
pub const REVOCATION_HANDLE: &str = "revocation_handle";

/// Largest encodable small integer (exclusive).
pub const SMALL_INT_LIMIT: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// First 31 bytes of SHA-256 of the UTF-8 value.
    Hash,
    /// Days since 1970-01-01 of a `YYYY-MM-DD` date.
    DayCount,
    /// Decimal integer below 2^16.
    SmallInt,
    /// Holder or issuer supplied integer, never disclosed.
    Reserved,
}

impl Encoding {
    /// Whether order predicates make sense for this encoding.
    pub fn is_ordered(self) -> bool {
        matches!(self, Encoding::DayCount | Encoding::SmallInt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub encoding: Encoding,
}

/// Ordered attribute list. Index 0 is always the link secret and the last
/// index the revocation handle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialSchema {
    pub schema_id: String,
    pub name: String,
    pub version: String,
    pub attributes: Vec<AttributeSpec>,
}

impl CredentialSchema {
    /// Wrap `claims` with the two reserved attributes.
    pub fn new(name: &str, version: &str, claims: &[(&str, Encoding)]) -> Result<Self> {
        let mut attributes = vec![AttributeSpec {
            name: LINK_SECRET.into(),
            encoding: Encoding::Reserved,
        }];
        for (n, e) in claims {
            if *e == Encoding::Reserved {
                return Err(AnonCredsError::InvalidSchema(format!("{n}: reserved encoding")));
            }
            attributes.push(AttributeSpec {
                name: (*n).into(),
                encoding: *e,
            });
        }
        attributes.push(AttributeSpec {
            name: REVOCATION_HANDLE.into(),
            encoding: Encoding::Reserved,
        });
        let schema = CredentialSchema {
            schema_id: format!("vaxpass:schema:{name}:{version}"),
            name: name.into(),
            version: version.into(),
            attributes,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// The vaccination record schema.
    pub fn vaccination() -> Self {
        Self::new(
            "vaccination",
            "1.0",
            &[
                ("full_name", Encoding::Hash),
                ("birth_date", Encoding::DayCount),
                ("pathogen", Encoding::Hash),
                ("laboratory", Encoding::Hash),
                ("dose", Encoding::SmallInt),
                ("vaccination_date", Encoding::DayCount),
                ("location", Encoding::Hash),
            ],
        )
        .expect("static schema is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.attributes.len();
        if n < 3 {
            return Err(AnonCredsError::InvalidSchema("needs at least one claim".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for a in &self.attributes {
            if !names.insert(a.name.as_str()) {
                return Err(AnonCredsError::InvalidSchema(format!("duplicate attribute {}", a.name)));
            }
        }
        let first = &self.attributes[0];
        let last = &self.attributes[n - 1];
        if first.name != LINK_SECRET || last.name != REVOCATION_HANDLE {
            return Err(AnonCredsError::InvalidSchema("reserved attributes misplaced".into()));
        }
        if self.attributes[1..n - 1]
            .iter()
            .any(|a| a.encoding == Encoding::Reserved)
        {
            return Err(AnonCredsError::InvalidSchema("reserved encoding on a claim".into()));
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn handle_index(&self) -> usize {
        self.attributes.len() - 1
    }

    /// Non-reserved attributes, in order.
    pub fn claims(&self) -> &[AttributeSpec] {
        &self.attributes[1..self.attributes.len() - 1]
    }

    pub fn is_reserved(&self, name: &str) -> bool {
        name == LINK_SECRET || name == REVOCATION_HANDLE
    }

    /// A disclosable claim, or `UNKNOWN_ATTRIBUTE`.
    pub fn claim(&self, name: &str) -> Result<&AttributeSpec> {
        self.claims()
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| AnonCredsError::UnknownAttribute(name.into()))
    }

    pub fn encode(&self, name: &str, raw: &str) -> Result<BigInt> {
        encode_value(self.claim(name)?.encoding, raw)
    }
}

pub fn encode_value(encoding: Encoding, raw: &str) -> Result<BigInt> {
    match encoding {
        Encoding::Hash => {
            let digest = Sha256::digest(raw.as_bytes());
            Ok(BigInt::from_bytes_be(Sign::Plus, &digest[..31]))
        }
        Encoding::DayCount => {
            let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
                .map_err(|_| AnonCredsError::BadFormat(format!("not a YYYY-MM-DD date: {raw:?}")))?;
            Ok(BigInt::from(day_count(date)))
        }
        Encoding::SmallInt => {
            let v: u64 = raw
                .parse()
                .map_err(|_| AnonCredsError::BadFormat(format!("not a non-negative integer: {raw:?}")))?;
            if v >= SMALL_INT_LIMIT {
                return Err(AnonCredsError::BadFormat(format!("{v} does not fit in 16 bits")));
            }
            Ok(BigInt::from(v))
        }
        Encoding::Reserved => Err(AnonCredsError::BadFormat("reserved attributes have no raw form".into())),
    }
}

/// Encode a claim of the vaccination schema (or any schema declaring
/// `name`).
pub fn encode_attribute(schema: &CredentialSchema, name: &str, raw: &str) -> Result<BigInt> {
    schema.encode(name, raw)
}

pub fn day_count(date: NaiveDate) -> i64 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
    (date - epoch).num_days()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vaccination_layout() {
        let s = CredentialSchema::vaccination();
        assert_eq!(s.arity(), 9);
        assert_eq!(s.index_of(LINK_SECRET), Some(0));
        assert_eq!(s.index_of(REVOCATION_HANDLE), Some(8));
        assert_eq!(s.claims().len(), 7);
        assert!(s.claim(LINK_SECRET).is_err());
    }

    #[test]
    fn encodings() {
        let s = CredentialSchema::vaccination();
        assert_eq!(s.encode("dose", "2").unwrap(), BigInt::from(2));
        assert_eq!(s.encode("dose", "-1").unwrap_err().code(), "BAD_FORMAT");
        assert_eq!(s.encode("dose", "65536").unwrap_err().code(), "BAD_FORMAT");
        assert_eq!(s.encode("birth_date", "1969-12-31").unwrap(), BigInt::from(-1));
        assert_eq!(s.encode("birth_date", "2021-02-30").unwrap_err().code(), "BAD_FORMAT");
        assert_eq!(s.encode("nickname", "x").unwrap_err().code(), "UNKNOWN_ATTRIBUTE");
        assert!(s.encode("laboratory", "LabX").unwrap().bits() <= 248);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = CredentialSchema::new("x", "1", &[("a", Encoding::Hash), ("a", Encoding::Hash)]);
        assert_eq!(err.unwrap_err().code(), "INVALID_SCHEMA");
    }
}
