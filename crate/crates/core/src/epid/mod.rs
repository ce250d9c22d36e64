//! RSA-based EPID: issuer setup, blinded join, membership signatures of
//! knowledge and revocation lists.

pub mod join;
pub mod keys;
pub mod membership;
pub mod revocation;

#[cfg(test)]
pub(crate) mod test_support;

pub use join::{
    complete_join, issue_credential, join_member, join_request, verify_join_request, CredentialResponse, JoinError,
    JoinProof, JoinRequest, JoinState, UserMemberPrivateKey,
};
pub use keys::{
    setup_group, validate_gpk, GeneratorProof, GpkError, GroupIssuingPrivateKey, GroupPublicKey, SetupError,
};
pub use membership::{
    sign_membership, sign_membership_bypassing_revocation, uses_named_base, verify_membership, BaseMode,
    MembershipSignature, NonRevocationFailure, NonRevocationProof, SignError, VerifyError,
};
pub use revocation::{revoke_by_issuer, revoke_signature, RevocationEntry, RevocationKind, RevocationList};
