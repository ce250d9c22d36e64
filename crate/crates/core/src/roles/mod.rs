//! The four protocol roles (issuer, verifier, user, and the permissions
//! database the verifier keeps) and the message flow between them.

pub mod channel;
pub mod error;
pub mod issuer;
pub mod messages;
pub mod permissions;
pub mod protocol;
pub mod session;
pub mod user;
pub mod verifier;

use crate::group_math::{SubgroupElement, Transcript};

pub use channel::{Envelope, Network};
pub use error::ProtocolError;
pub use issuer::{IssuerActor, IssuerGroup};
pub use messages::Message;
pub use permissions::{PermissionEntry, PermissionsDatabase};
pub use protocol::*;
pub use session::{AnonymousIdentityCertificate, DisclosureRecord, PskSession};
pub use user::{TransactionKey, UserActor};
pub use verifier::{SessionStatus, VerifierActor, CHALLENGE_TTL};

/// Sender/recipient id the user takes on towards the verifier.
pub const ANONYMOUS: &str = "anonymous";

/// The message a membership proof signs: the verifier's challenge and the
/// prover's key-agreement share, so the share cannot be swapped in transit.
pub fn proof_message(challenge: &[u8], share: &SubgroupElement) -> Vec<u8> {
    Transcript::new("chainanchor/prove").bytes(challenge).int(share.value()).encode()
}
