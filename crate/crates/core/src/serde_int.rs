//! Serde adapters writing big integers as base-10 strings.
//!
//! Use with `#[serde(with = "vaxpass_core::serde_int::biguint")]` and friends.

use num_bigint::{BigInt, BigUint};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

fn parse_unsigned<E: serde::de::Error>(s: &str) -> Result<BigUint, E> {
    // reject forms that would decode to the same integer from different text
    let canonical = s == "0" || (!s.is_empty() && !s.starts_with('0'));
    if !canonical || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(E::custom(format!("not a canonical base-10 integer: {s:?}")));
    }
    s.parse::<BigUint>().map_err(E::custom)
}

fn parse_signed<E: serde::de::Error>(s: &str) -> Result<BigInt, E> {
    match s.strip_prefix('-') {
        Some(rest) if rest != "0" => Ok(-BigInt::from(parse_unsigned::<E>(rest)?)),
        Some(_) => Err(E::custom("negative zero")),
        None => Ok(BigInt::from(parse_unsigned::<E>(s)?)),
    }
}

pub mod biguint {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        parse_unsigned(&s)
    }
}

pub mod bigint {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        parse_signed(&s)
    }
}

pub mod biguint_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&x.to_str_radix(10))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_unsigned(s))
            .collect()
    }
}

pub mod bigint_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&x.to_str_radix(10))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_signed(s))
            .collect()
    }
}

pub mod biguint_map {
    use super::*;
    use serde::ser::SerializeMap;
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, BigUint>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, &v.to_str_radix(10))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, BigUint>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| Ok((k, parse_unsigned(&v)?)))
            .collect()
    }
}

/// Lower-case hex for byte fields. Upper-case input is rejected so that a
/// byte string has exactly one textual form.
pub mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        let mut out = String::with_capacity(bytes.len() * 2);
        for b in bytes {
            out.push_str(&format!("{b:02x}"));
        }
        s.serialize_str(&out)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        decode(&s).ok_or_else(|| D::Error::custom("expected lower-case hex"))
    }

    pub fn decode(s: &str) -> Option<Vec<u8>> {
        if s.len() % 2 != 0 {
            return None;
        }
        let nibble = |c: u8| match c {
            b'0'..=b'9' => Some(c - b'0'),
            b'a'..=b'f' => Some(c - b'a' + 10),
            _ => None,
        };
        s.as_bytes()
            .chunks(2)
            .map(|pair| Some(nibble(pair[0])? << 4 | nibble(pair[1])?))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Wrap {
        #[serde(with = "super::bigint")]
        x: num_bigint::BigInt,
    }

    #[test]
    fn rejects_non_canonical_integers() {
        for bad in ["\"007\"", "\"-0\"", "\"+5\"", "\"\"", "\" 5\""] {
            let json = format!("{{\"x\":{bad}}}");
            assert!(serde_json::from_str::<Wrap>(&json).is_err(), "{bad}");
        }
        let ok: Wrap = serde_json::from_str("{\"x\":\"-12\"}").unwrap();
        assert_eq!(ok.x, num_bigint::BigInt::from(-12));
    }

    #[test]
    fn hex_is_lower_case_only() {
        assert_eq!(super::hex_bytes::decode("0aff"), Some(vec![0x0a, 0xff]));
        assert_eq!(super::hex_bytes::decode("0AFF"), None);
    }
}
