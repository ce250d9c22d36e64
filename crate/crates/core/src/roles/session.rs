//! Pairwise shared keys bound to an accepted membership proof, anonymous
//! identity certificates and key-disclosure statements.

use std::fmt;

use hkdf::Hkdf;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::group_math::encoding::{hex_bytes, int_bytes};
use crate::group_math::{SchnorrGroup, SubgroupElement, Transcript};
use crate::signature::{Signature, SignatureError, VerifyingKey};

const PSK_SALT: &[u8] = b"chainanchor/psk";

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PskSession {
    pub session_id: String,
    #[serde(with = "hex_bytes")]
    pub psk: [u8; 32],
    /// Hash over the session id, `H(σ)`, `m`, `n_pv` and both DH shares.
    #[serde(with = "hex_bytes")]
    pub transcript_hash: [u8; 32],
}

impl fmt::Debug for PskSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PskSession")
            .field("session_id", &self.session_id)
            .field("transcript_hash", &hex::encode(self.transcript_hash))
            .finish_non_exhaustive()
    }
}

/// Inputs both sides hash into the session key.
pub struct PskInputs<'a> {
    pub session_id: &'a str,
    pub signature_digest: &'a [u8; 32],
    pub message: &'a [u8],
    pub nonce: &'a [u8],
    pub user_share: &'a SubgroupElement,
    pub verifier_share: &'a SubgroupElement,
}

/// `PSK = HKDF(u^xy, info = H(session, H(σ), m, n_pv, X, Y))`.
pub fn derive_psk(shared: &SubgroupElement, inputs: &PskInputs<'_>) -> PskSession {
    let transcript_hash = Transcript::new("chainanchor/psk-transcript")
        .bytes(inputs.session_id)
        .bytes(inputs.signature_digest)
        .bytes(inputs.message)
        .bytes(inputs.nonce)
        .ints([inputs.user_share.value(), inputs.verifier_share.value()])
        .digest();
    let hk = Hkdf::<Sha256>::new(Some(PSK_SALT), &int_bytes(shared.value()));
    let mut psk = [0u8; 32];
    hk.expand(&transcript_hash, &mut psk).expect("32 bytes is a valid HKDF output length");
    PskSession { session_id: inputs.session_id.to_owned(), psk, transcript_hash }
}

/// Additional data for AEAD messages inside a session, per purpose.
pub fn session_aad(purpose: &str, session_id: &str) -> Vec<u8> {
    Transcript::new("chainanchor/session-aad").bytes(purpose).bytes(session_id).encode()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymousIdentityCertificate {
    pub anon_id: String,
    pub bound_key: VerifyingKey,
    pub issued_at: u64,
    /// Domain of the verifier that signed.
    pub issuer: String,
    pub signature: Signature,
}

impl AnonymousIdentityCertificate {
    pub fn signing_bytes(anon_id: &str, bound_key: &VerifyingKey, issued_at: u64, issuer: &str) -> Vec<u8> {
        Transcript::new("chainanchor/anonymous-identity")
            .bytes(anon_id)
            .bytes(bound_key.to_bytes())
            .u64(issued_at)
            .bytes(issuer)
            .encode()
    }

    pub fn verify(&self, group: &SchnorrGroup, verifier_key: &VerifyingKey) -> Result<(), SignatureError> {
        let bytes = Self::signing_bytes(&self.anon_id, &self.bound_key, self.issued_at, &self.issuer);
        verifier_key.verify(group, &bytes, &self.signature)
    }
}

/// A voluntary proof of control over one transaction key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosureRecord {
    pub key: VerifyingKey,
    pub disclosed_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<String>,
}

/// Bytes signed with the transaction key being disclosed.
pub fn disclosure_statement(verifier: &str, key: &VerifyingKey, disclosed_at: u64) -> Vec<u8> {
    Transcript::new("chainanchor/disclosure").bytes(verifier).bytes(key.to_bytes()).u64(disclosed_at).encode()
}
