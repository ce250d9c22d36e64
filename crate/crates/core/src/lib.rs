//! ChainAnchor: anonymous-but-verifiable membership for permissioned ledgers.
//!
//! Members join a group through a blinded RSA-based EPID join, prove
//! membership with signatures of knowledge, and register self-generated
//! transaction keys with a permissions verifier. Consensus nodes admit only
//! transactions whose sender key appears in the verifier's permissions
//! database.

pub mod epid;
pub mod group_math;
pub mod ledger;
pub mod roles;
pub mod signature;
