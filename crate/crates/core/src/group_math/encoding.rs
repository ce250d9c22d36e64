//! Integer encodings: big-endian bytes for transcripts, hex strings for text
//! formats. Signed values use sign-and-magnitude (`-` prefix in hex, a leading
//! sign byte in binary).

use num_bigint::{BigInt, BigUint, Sign};

/// Minimal big-endian bytes; zero encodes as a single `0x00`.
pub fn int_bytes(n: &BigUint) -> Vec<u8> {
    n.to_bytes_be()
}

/// Sign byte (`0x00` non-negative, `0x01` negative) followed by the magnitude.
pub fn signed_int_bytes(n: &BigInt) -> Vec<u8> {
    let (sign, mag) = n.to_bytes_be();
    let mut out = Vec::with_capacity(mag.len() + 1);
    out.push(u8::from(sign == Sign::Minus));
    out.extend(mag);
    out
}

pub fn to_hex(n: &BigUint) -> String {
    n.to_str_radix(16)
}

pub fn from_hex(s: &str) -> Option<BigUint> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 16)
}

pub fn signed_to_hex(n: &BigInt) -> String {
    match n.sign() {
        Sign::Minus => format!("-{}", n.magnitude().to_str_radix(16)),
        _ => n.magnitude().to_str_radix(16),
    }
}

pub fn signed_from_hex(s: &str) -> Option<BigInt> {
    match s.strip_prefix('-') {
        Some(rest) => from_hex(rest).map(|m| -BigInt::from(m)),
        None => from_hex(s).map(BigInt::from),
    }
}

/// `#[serde(with = "hex_uint")]` for `BigUint` fields.
pub mod hex_uint {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_hex(n))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        super::from_hex(&s).ok_or_else(|| D::Error::custom(format!("invalid hex integer {s:?}")))
    }
}

/// `#[serde(with = "hex_int")]` for signed `BigInt` fields.
pub mod hex_int {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::signed_to_hex(n))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        super::signed_from_hex(&s).ok_or_else(|| D::Error::custom(format!("invalid signed hex integer {s:?}")))
    }
}

/// `#[serde(with = "hex_bytes")]` for byte strings.
pub mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: AsRef<[u8]>>(b: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<T, D::Error>
    where
        D: Deserializer<'de>,
        T: TryFrom<Vec<u8>>,
    {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        T::try_from(bytes).map_err(|_| D::Error::custom("byte string has the wrong length"))
    }
}
