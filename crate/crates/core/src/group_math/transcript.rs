//! Canonical transcript encoding and the Fiat-Shamir challenge.
//!
//! Every element is framed as a 4-byte big-endian length followed by its
//! bytes; the framed elements are concatenated in order and hashed with
//! [`TranscriptHash`]. This binary form is normative: any implementation
//! that frames and hashes the same elements derives the same challenge.

use num_bigint::{BigInt, BigUint};
use sha2::{Digest, Sha256};

use super::encoding::{int_bytes, signed_int_bytes};

/// The single hash used for challenges, basename hashing and identifiers.
pub type TranscriptHash = Sha256;

pub fn hash_bytes(data: &[u8]) -> [u8; 32] {
    TranscriptHash::digest(data).into()
}

pub fn canonical_encode<T: AsRef<[u8]>>(items: &[T]) -> Vec<u8> {
    let total = items.iter().map(|i| i.as_ref().len() + 4).sum();
    let mut out = Vec::with_capacity(total);
    for item in items {
        let item = item.as_ref();
        let len = u32::try_from(item.len()).expect("transcript element exceeds 4 GiB");
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(item);
    }
    out
}

/// Hash of the canonical encoding, reduced to `[0, 2^bits)` by keeping the
/// low `bits` bits of the big-endian digest.
pub fn fiat_shamir_challenge<T: AsRef<[u8]>>(items: &[T], bits: u32) -> BigUint {
    assert!(bits <= 256, "challenge longer than the transcript hash");
    let digest = hash_bytes(&canonical_encode(items));
    let full = BigUint::from_bytes_be(&digest);
    if bits == 256 {
        full
    } else {
        full % (BigUint::from(1u32) << bits)
    }
}

/// Output of `bits` bits derived from `input` by counter-mode hashing.
pub fn expand_hash(input: &[u8], bits: u64) -> BigUint {
    let mut out = Vec::new();
    let mut block = 0u32;
    while (out.len() as u64) * 8 < bits {
        let mut h = TranscriptHash::new();
        h.update(block.to_be_bytes());
        h.update(input);
        out.extend_from_slice(&h.finalize());
        block += 1;
    }
    let n = BigUint::from_bytes_be(&out);
    n >> ((out.len() as u64) * 8 - bits)
}

/// Ordered builder of transcript elements.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    items: Vec<Vec<u8>>,
}

impl Transcript {
    pub fn new(domain: &str) -> Self {
        Self { items: vec![domain.as_bytes().to_vec()] }
    }

    pub fn bytes(mut self, b: impl AsRef<[u8]>) -> Self {
        self.items.push(b.as_ref().to_vec());
        self
    }

    pub fn int(mut self, n: &BigUint) -> Self {
        self.items.push(int_bytes(n));
        self
    }

    pub fn ints<'a>(mut self, ns: impl IntoIterator<Item = &'a BigUint>) -> Self {
        self.items.extend(ns.into_iter().map(int_bytes));
        self
    }

    pub fn signed(mut self, n: &BigInt) -> Self {
        self.items.push(signed_int_bytes(n));
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.items.push(v.to_be_bytes().to_vec());
        self
    }

    pub fn items(&self) -> &[Vec<u8>] {
        &self.items
    }

    pub fn encode(&self) -> Vec<u8> {
        canonical_encode(&self.items)
    }

    pub fn challenge(&self, bits: u32) -> BigUint {
        fiat_shamir_challenge(&self.items, bits)
    }

    pub fn digest(&self) -> [u8; 32] {
        hash_bytes(&self.encode())
    }
}
