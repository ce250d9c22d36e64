use thiserror::Error;

use crate::epid::{GpkError, JoinError, SetupError, VerifyError};

/// Failure of a protocol step. `Display` gives the short reason printed by
/// drivers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("malformed message")]
    Malformed,
    #[error("unexpected message at step {0}")]
    Unexpected(String),
    #[error("group {0} already exists")]
    DuplicateGroup(String),
    #[error("unknown group {0}")]
    UnknownGroup(String),
    #[error("group setup failed: {0}")]
    Setup(String),
    #[error("signature check failed")]
    BadSignature,
    #[error("group public key rejected: {0}")]
    InvalidGpk(GpkError),
    #[error("authentication failed")]
    AuthenticationFailed,
    #[error("not approved")]
    NotApproved,
    #[error("{0}")]
    Join(JoinError),
    #[error("missing step {0}")]
    MissingStep(&'static str),
    #[error("unknown challenge")]
    UnknownChallenge,
    #[error("challenge expired")]
    ChallengeExpired,
    #[error("revoked")]
    Revoked,
    #[error("membership proof rejected: {0}")]
    ProofRejected(VerifyError),
    #[error("key agreement mismatch")]
    KeyAgreement,
    #[error("authenticated decryption failed")]
    Decryption,
    #[error("duplicate key")]
    DuplicateKey,
    #[error("unregistered key")]
    UnregisteredKey,
    #[error("invalid transaction key")]
    InvalidKey,
    #[error("session {0} is not established")]
    NoSession(String),
    #[error("session already registered a key")]
    SessionUsed,
    #[error("unknown key index {0}")]
    UnknownKeyIndex(usize),
    #[error("rejected by peer: {0}")]
    Remote(String),
}

impl From<JoinError> for ProtocolError {
    fn from(e: JoinError) -> Self {
        ProtocolError::Join(e)
    }
}

impl From<GpkError> for ProtocolError {
    fn from(e: GpkError) -> Self {
        ProtocolError::InvalidGpk(e)
    }
}

impl From<SetupError> for ProtocolError {
    fn from(e: SetupError) -> Self {
        ProtocolError::Setup(e.to_string())
    }
}

impl From<VerifyError> for ProtocolError {
    fn from(e: VerifyError) -> Self {
        ProtocolError::ProofRejected(e)
    }
}
