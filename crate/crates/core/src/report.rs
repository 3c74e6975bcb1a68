//! Serialization helpers shared by the report types.

use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

/// Big integers are written as decimal strings so no JSON consumer loses precision.
pub fn bigint_str<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

pub fn bigint_vec_str<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|n| n.to_string()))
}

/// Reads a big integer from a JSON integer or a decimal string.
pub fn bigint_de<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => Ok(BigInt::from(v)),
        Raw::Text(t) => t.trim().parse().map_err(|_| D::Error::custom(format!("'{t}' is not an integer"))),
    }
}
