//! Payloads carried in envelopes. Encoded as JSON with big integers in hex.

use serde::{Deserialize, Serialize};

use crate::epid::{CredentialResponse, GroupPublicKey, JoinRequest, MembershipSignature, RevocationList};
use crate::group_math::encoding::hex_bytes;
use crate::group_math::SubgroupElement;
use crate::signature::{Signature, VerifyingKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Message {
    GroupKey {
        group_id: String,
        gpk: GroupPublicKey,
    },
    IssuerRevocations {
        group_id: String,
        list: RevocationList,
    },
    AuthHello {
        account: String,
        group_id: String,
    },
    AuthChallenge {
        #[serde(with = "hex_bytes")]
        nonce: Vec<u8>,
    },
    AuthResponse {
        account: String,
        group_id: String,
        #[serde(with = "hex_bytes")]
        nonce: Vec<u8>,
        signature: Signature,
    },
    Approval {
        group_id: String,
        gpk: GroupPublicKey,
        #[serde(with = "hex_bytes")]
        join_nonce: Vec<u8>,
        #[serde(with = "hex_bytes")]
        issuer_basename: Vec<u8>,
    },
    Join {
        group_id: String,
        request: JoinRequest,
    },
    Credential {
        group_id: String,
        response: CredentialResponse,
    },
    ChallengeRequest,
    Challenge {
        session_id: String,
        #[serde(with = "hex_bytes")]
        message: Vec<u8>,
        #[serde(with = "hex_bytes")]
        nonce: Vec<u8>,
        expires_at: u64,
        sig_rl: RevocationList,
        issuer_rl: RevocationList,
    },
    MembershipProof {
        session_id: String,
        signature: MembershipSignature,
        share: SubgroupElement,
    },
    ProofAccepted {
        session_id: String,
        share: SubgroupElement,
        #[serde(with = "hex_bytes")]
        confirm: Vec<u8>,
    },
    KeyConfirm {
        session_id: String,
        #[serde(with = "hex_bytes")]
        confirm: Vec<u8>,
    },
    SessionEstablished {
        session_id: String,
    },
    RegisterKey {
        session_id: String,
        #[serde(with = "hex_bytes")]
        sealed: Vec<u8>,
    },
    RegisterAck {
        session_id: String,
        #[serde(with = "hex_bytes")]
        sealed: Vec<u8>,
    },
    IdentityRequest {
        session_id: String,
        #[serde(with = "hex_bytes")]
        sealed: Vec<u8>,
    },
    IdentityIssued {
        session_id: String,
        #[serde(with = "hex_bytes")]
        sealed: Vec<u8>,
    },
    Disclosure {
        key: VerifyingKey,
        disclosed_at: u64,
        signature: Signature,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        identity: Option<String>,
    },
    DisclosureRecorded,
    Rejected {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        reason: String,
    },
}

impl Message {
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("messages always serialize")
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        serde_json::from_slice(bytes).ok()
    }
}
