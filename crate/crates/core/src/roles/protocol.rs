//! Drivers that run each protocol step end to end over a [`Network`],
//! delivering every message so that each party's view is logged.
//!
//! When a handler rejects, the driver delivers a `rejected` message to the
//! other side before returning the error, so failures are visible in both
//! transcripts.

use rand::Rng;

use super::channel::{Envelope, Network};
use super::error::ProtocolError;
use super::issuer::IssuerActor;
use super::messages::Message;
use super::session::{AnonymousIdentityCertificate, DisclosureRecord, PskSession};
use super::user::UserActor;
use super::verifier::VerifierActor;
use super::ANONYMOUS;
use crate::group_math::ParameterProfile;
use crate::signature::VerifyingKey;

fn rejection(from: &str, to: &str, step: &str, session_id: Option<&str>, err: &ProtocolError) -> Envelope {
    let msg = Message::Rejected { session_id: session_id.map(str::to_owned), reason: err.to_string() };
    Envelope::new(from, to, step, &msg)
}

/// Step 0.
pub fn pi_establish_group<R: Rng + ?Sized>(
    issuer: &mut IssuerActor,
    group_id: &str,
    profile: &ParameterProfile,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    issuer.establish_group(group_id, profile, rng).map(|_| ())
}

/// Step 1: signed delivery of the group public key to the verifier.
pub fn pi_share_gpk<R: Rng + ?Sized>(
    issuer: &IssuerActor,
    verifier: &mut VerifierActor,
    group_id: &str,
    net: &mut Network,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let env = issuer.gpk_envelope(group_id, verifier.domain(), rng)?;
    verifier.receive_gpk(&net.deliver(env))
}

/// Pushes the issuer's current revocation list to the verifier.
pub fn pi_publish_issuer_rl<R: Rng + ?Sized>(
    issuer: &IssuerActor,
    verifier: &mut VerifierActor,
    group_id: &str,
    net: &mut Network,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let env = issuer.issuer_rl_envelope(group_id, verifier.domain(), rng)?;
    verifier.receive_issuer_rl(&net.deliver(env))
}

/// Step 2: authenticate with the identity key and obtain approval.
pub fn user_request_membership<R: Rng + ?Sized>(
    user: &mut UserActor,
    issuer: &mut IssuerActor,
    group_id: &str,
    net: &mut Network,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let hello = net.deliver(user.auth_hello(group_id));
    let challenge = match issuer.handle_auth_hello(&hello, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            net.deliver(rejection(issuer.domain(), user.account(), "2", None, &e));
            return Err(e);
        }
    };
    let response = net.deliver(user.handle_auth_challenge(&challenge, group_id, rng)?);
    let approval = match issuer.handle_auth_response(&response, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            net.deliver(rejection(issuer.domain(), user.account(), "2", None, &e));
            return Err(e);
        }
    };
    user.handle_approval(&approval)
}

/// Steps 3-5. Returns the index of the new member key.
pub fn user_join_group<R: Rng + ?Sized>(
    user: &mut UserActor,
    issuer: &mut IssuerActor,
    net: &mut Network,
    rng: &mut R,
) -> Result<usize, ProtocolError> {
    let request = net.deliver(user.join_request(rng)?);
    let response = match issuer.handle_join(&request, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            net.deliver(rejection(issuer.domain(), user.account(), "4", None, &e));
            return Err(e);
        }
    };
    user.handle_credential(&response, rng)
}

/// Steps 6.1-6.2. Returns the session id naming the challenge.
pub fn pv_challenge<R: Rng + ?Sized>(
    user: &mut UserActor,
    verifier: &mut VerifierActor,
    net: &mut Network,
    now: u64,
    rng: &mut R,
) -> Result<String, ProtocolError> {
    let request = net.deliver(user.request_challenge(verifier.domain()));
    let challenge = match verifier.handle_challenge_request(&request, now, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            net.deliver(rejection(verifier.domain(), ANONYMOUS, "6.2", None, &e));
            return Err(e);
        }
    };
    user.handle_challenge(&challenge)
}

/// Steps 6.3-6.6: membership proof, key agreement and mutual key
/// confirmation.
#[allow(clippy::too_many_arguments)]
pub fn user_prove_membership<R: Rng + ?Sized>(
    user: &mut UserActor,
    verifier: &mut VerifierActor,
    session_id: &str,
    member_key: usize,
    net: &mut Network,
    now: u64,
    rng: &mut R,
) -> Result<PskSession, ProtocolError> {
    let proof = net.deliver(user.prove(session_id, member_key, verifier.domain(), rng)?);
    let accepted = match verifier.handle_proof(&proof, now, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            let rej = net.deliver(rejection(verifier.domain(), ANONYMOUS, "6.4", Some(session_id), &e));
            let _ = user.handle_proof_response(&rej, rng);
            return Err(e);
        }
    };
    let confirm = match user.handle_proof_response(&accepted, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            let rej = net.deliver(rejection(ANONYMOUS, verifier.domain(), "6.5", Some(session_id), &e));
            verifier.handle_rejection(&rej);
            return Err(e);
        }
    };
    let established = match verifier.handle_key_confirm(&confirm) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            let rej = net.deliver(rejection(verifier.domain(), ANONYMOUS, "6.6", Some(session_id), &e));
            let _ = user.handle_session_established(&rej);
            return Err(e);
        }
    };
    user.handle_session_established(&established)
}

/// Step 6.7.
#[allow(clippy::too_many_arguments)]
pub fn register_transaction_key<R: Rng + ?Sized>(
    user: &mut UserActor,
    verifier: &mut VerifierActor,
    session_id: &str,
    key_index: usize,
    net: &mut Network,
    now: u64,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let env = net.deliver(user.register_key(session_id, key_index, verifier.domain(), rng)?);
    let ack = match verifier.handle_register(&env, now, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            net.deliver(rejection(verifier.domain(), ANONYMOUS, "6.7", Some(session_id), &e));
            return Err(e);
        }
    };
    user.handle_register_ack(&ack, key_index)
}

/// Step 7.
pub fn pv_issue_anonymous_identity<R: Rng + ?Sized>(
    user: &mut UserActor,
    verifier: &mut VerifierActor,
    key_index: usize,
    net: &mut Network,
    now: u64,
    rng: &mut R,
) -> Result<AnonymousIdentityCertificate, ProtocolError> {
    let env = net.deliver(user.identity_request(key_index, verifier.domain(), rng)?);
    let issued = match verifier.handle_identity_request(&env, now, rng) {
        Ok(env) => net.deliver(env),
        Err(e) => {
            net.deliver(rejection(verifier.domain(), ANONYMOUS, "7", None, &e));
            return Err(e);
        }
    };
    user.handle_identity(&issued, key_index)
}

/// Step 10 lookup.
pub fn pv_lookup(verifier: &VerifierActor, key: &VerifyingKey) -> bool {
    verifier.lookup(key)
}

/// Voluntary disclosure of one transaction key.
#[allow(clippy::too_many_arguments)]
pub fn user_disclose_key<R: Rng + ?Sized>(
    user: &UserActor,
    verifier: &mut VerifierActor,
    key_index: usize,
    attach_identity: bool,
    net: &mut Network,
    now: u64,
    rng: &mut R,
) -> Result<DisclosureRecord, ProtocolError> {
    let env = net.deliver(user.disclose(key_index, verifier.domain(), now, attach_identity, rng)?);
    match verifier.handle_disclosure(&env) {
        Ok(ack) => {
            net.deliver(ack);
            Ok(verifier.disclosures().last().cloned().expect("just recorded"))
        }
        Err(e) => {
            net.deliver(rejection(verifier.domain(), &env.sender, "disclose", None, &e));
            Err(e)
        }
    }
}

/// What one full anonymous onboarding of a transaction key produced.
#[derive(Debug, Clone)]
pub struct Onboarding {
    pub session: PskSession,
    pub certificate: AnonymousIdentityCertificate,
}

/// Steps 6.1-7 for one transaction key, in a fresh session.
#[allow(clippy::too_many_arguments)]
pub fn onboard_transaction_key<R: Rng + ?Sized>(
    user: &mut UserActor,
    verifier: &mut VerifierActor,
    member_key: usize,
    key_index: usize,
    net: &mut Network,
    now: u64,
    rng: &mut R,
) -> Result<Onboarding, ProtocolError> {
    let session_id = pv_challenge(user, verifier, net, now, rng)?;
    let session = user_prove_membership(user, verifier, &session_id, member_key, net, now, rng)?;
    register_transaction_key(user, verifier, &session_id, key_index, net, now, rng)?;
    let certificate = pv_issue_anonymous_identity(user, verifier, key_index, net, now, rng)?;
    Ok(Onboarding { session, certificate })
}
