//! The permissions verifier: checks anonymous membership proofs, agrees a
//! session key with each prover, and keeps the permissions database.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{open, seal, Envelope};
use super::error::ProtocolError;
use super::messages::Message;
use super::permissions::PermissionsDatabase;
use super::session::{
    derive_psk, disclosure_statement, session_aad, AnonymousIdentityCertificate, DisclosureRecord, PskInputs,
    PskSession,
};
use super::{proof_message, ANONYMOUS};
use crate::epid::{revoke_signature, validate_gpk, verify_membership, GroupPublicKey, RevocationKind, RevocationList};
use crate::group_math::encoding::hex_bytes;
use crate::group_math::{SchnorrGroup, SubgroupElement};
use crate::signature::{KeyPair, VerifyingKey};

/// Logical-clock ticks a challenge stays valid.
pub const CHALLENGE_TTL: u64 = 300;
pub const NONCE_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingChallenge {
    #[serde(with = "hex_bytes")]
    pub message: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub nonce: Vec<u8>,
    pub expires_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    AwaitingConfirm,
    Established,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierSession {
    pub status: SessionStatus,
    pub psk: PskSession,
    pub registered_key: Option<VerifyingKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierActor {
    domain: String,
    identity: KeyPair,
    system: SchnorrGroup,
    /// Pinned identity key of the issuer.
    issuer_key: VerifyingKey,
    gpk: Option<GroupPublicKey>,
    permissions_db: PermissionsDatabase,
    sig_rl: RevocationList,
    issuer_rl: RevocationList,
    pending_challenges: BTreeMap<String, PendingChallenge>,
    sessions: BTreeMap<String, VerifierSession>,
    issued_identities: BTreeMap<String, AnonymousIdentityCertificate>,
    disclosures: Vec<DisclosureRecord>,
}

impl VerifierActor {
    pub fn new<R: Rng + ?Sized>(domain: &str, system: SchnorrGroup, issuer_key: VerifyingKey, rng: &mut R) -> Self {
        let identity = KeyPair::generate(&system, rng);
        Self {
            domain: domain.to_owned(),
            identity,
            system,
            issuer_key,
            gpk: None,
            permissions_db: PermissionsDatabase::new(""),
            sig_rl: RevocationList::new(RevocationKind::Signature),
            issuer_rl: RevocationList::new(RevocationKind::Issuer),
            pending_challenges: BTreeMap::new(),
            sessions: BTreeMap::new(),
            issued_identities: BTreeMap::new(),
            disclosures: Vec::new(),
        }
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn public_key(&self) -> &VerifyingKey {
        self.identity.public()
    }

    pub fn gpk(&self) -> Option<&GroupPublicKey> {
        self.gpk.as_ref()
    }

    pub fn permissions_db(&self) -> &PermissionsDatabase {
        &self.permissions_db
    }

    pub fn sig_rl(&self) -> &RevocationList {
        &self.sig_rl
    }

    pub fn issuer_rl(&self) -> &RevocationList {
        &self.issuer_rl
    }

    pub fn pending_challenges(&self) -> &BTreeMap<String, PendingChallenge> {
        &self.pending_challenges
    }

    pub fn session(&self, session_id: &str) -> Option<&VerifierSession> {
        self.sessions.get(session_id)
    }

    pub fn issued_identities(&self) -> &BTreeMap<String, AnonymousIdentityCertificate> {
        &self.issued_identities
    }

    pub fn disclosures(&self) -> &[DisclosureRecord] {
        &self.disclosures
    }

    /// Read-only membership check used by consensus nodes.
    pub fn lookup(&self, key: &VerifyingKey) -> bool {
        self.permissions_db.contains(key)
    }

    fn require_gpk(&self) -> Result<&GroupPublicKey, ProtocolError> {
        self.gpk.as_ref().ok_or(ProtocolError::MissingStep("1"))
    }

    /// Step 1, receiving side.
    pub fn receive_gpk(&mut self, env: &Envelope) -> Result<(), ProtocolError> {
        env.verify_signature(&self.issuer_key, &self.system).map_err(|_| ProtocolError::BadSignature)?;
        let Some(Message::GroupKey { group_id, gpk }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        validate_gpk(&gpk)?;
        if self.permissions_db.group_id() != group_id {
            self.permissions_db = PermissionsDatabase::new(&group_id);
        }
        self.gpk = Some(gpk);
        Ok(())
    }

    /// Accepts a signed issuer revocation list no older than the current one.
    pub fn receive_issuer_rl(&mut self, env: &Envelope) -> Result<(), ProtocolError> {
        env.verify_signature(&self.issuer_key, &self.system).map_err(|_| ProtocolError::BadSignature)?;
        let Some(Message::IssuerRevocations { list, .. }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        if list.kind() != RevocationKind::Issuer || list.epoch() < self.issuer_rl.epoch() {
            return Err(ProtocolError::Malformed);
        }
        self.issuer_rl = list;
        Ok(())
    }

    /// Adds `(B, K)` to the signature revocation list. Returns false if it
    /// was already there.
    pub fn revoke_signature(&mut self, base: SubgroupElement, pseudonym: SubgroupElement) -> bool {
        let next = revoke_signature(&self.sig_rl, base, pseudonym);
        let changed = next != self.sig_rl;
        self.sig_rl = next;
        changed
    }

    /// Step 6.2: fresh `(m, n_pv)` under a new session id.
    pub fn challenge<R: Rng + ?Sized>(
        &mut self,
        now: u64,
        rng: &mut R,
    ) -> Result<(String, PendingChallenge), ProtocolError> {
        self.require_gpk()?;
        let session_id = loop {
            let id = hex::encode(rng.gen::<[u8; 16]>());
            if !self.pending_challenges.contains_key(&id) && !self.sessions.contains_key(&id) {
                break id;
            }
        };
        let pending = PendingChallenge {
            message: rng.gen::<[u8; 32]>().to_vec(),
            nonce: rng.gen::<[u8; NONCE_LEN]>().to_vec(),
            expires_at: now + CHALLENGE_TTL,
        };
        self.pending_challenges.insert(session_id.clone(), pending.clone());
        Ok((session_id, pending))
    }

    pub fn handle_challenge_request<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        now: u64,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::ChallengeRequest) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let (session_id, pending) = self.challenge(now, rng)?;
        let reply = Message::Challenge {
            session_id,
            message: pending.message,
            nonce: pending.nonce,
            expires_at: pending.expires_at,
            sig_rl: self.sig_rl.clone(),
            issuer_rl: self.issuer_rl.clone(),
        };
        Ok(Envelope::new(&self.domain, ANONYMOUS, "6.2", &reply))
    }

    /// Steps 6.3-6.4: consume the challenge, verify `σ`, answer with the
    /// verifier's DH share and a key-confirmation tag.
    pub fn handle_proof<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        now: u64,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::MembershipProof { session_id, signature, share }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let pending = self.pending_challenges.remove(&session_id).ok_or(ProtocolError::UnknownChallenge)?;
        if now > pending.expires_at {
            return Err(ProtocolError::ChallengeExpired);
        }
        let gpk = self.require_gpk()?;
        let group = &gpk.subgroup;
        verify_membership(
            gpk,
            &proof_message(&pending.message, &share),
            &pending.nonce,
            &signature,
            &self.sig_rl,
            &self.issuer_rl,
        )?;
        if share.is_identity() || !group.contains(share.value()) {
            return Err(ProtocolError::KeyAgreement);
        }

        let y = group.random_exponent(rng);
        let own_share = group.pow(&group.generator(), &y);
        let digest = signature.digest();
        let psk = derive_psk(
            &group.pow(&share, &y),
            &PskInputs {
                session_id: &session_id,
                signature_digest: &digest,
                message: &pending.message,
                nonce: &pending.nonce,
                user_share: &share,
                verifier_share: &own_share,
            },
        );
        let confirm = seal(&psk.psk, &session_aad("confirm/verifier", &session_id), &psk.transcript_hash, rng);
        self.sessions.insert(
            session_id.clone(),
            VerifierSession { status: SessionStatus::AwaitingConfirm, psk, registered_key: None },
        );
        let reply = Message::ProofAccepted { session_id, share: own_share, confirm };
        Ok(Envelope::new(&self.domain, ANONYMOUS, "6.4", &reply).signed(&self.identity, &self.system, rng))
    }

    /// Step 6.5-6.6: the user's confirmation tag must open under our key.
    pub fn handle_key_confirm(&mut self, env: &Envelope) -> Result<Envelope, ProtocolError> {
        let Some(Message::KeyConfirm { session_id, confirm }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let session = self
            .sessions
            .get_mut(&session_id)
            .filter(|s| s.status == SessionStatus::AwaitingConfirm)
            .ok_or_else(|| ProtocolError::NoSession(session_id.clone()))?;
        let opened = open(&session.psk.psk, &session_aad("confirm/user", &session_id), &confirm);
        if opened.as_deref() != Ok(&session.psk.transcript_hash[..]) {
            session.status = SessionStatus::Failed(ProtocolError::KeyAgreement.to_string());
            return Err(ProtocolError::KeyAgreement);
        }
        session.status = SessionStatus::Established;
        Ok(Envelope::new(&self.domain, ANONYMOUS, "6.6", &Message::SessionEstablished { session_id }))
    }

    /// A prover-side abort: the session is dead on this side too.
    pub fn handle_rejection(&mut self, env: &Envelope) {
        if let Some(Message::Rejected { session_id: Some(id), reason }) = env.message() {
            if let Some(s) = self.sessions.get_mut(&id) {
                if s.status != SessionStatus::Established {
                    s.status = SessionStatus::Failed(reason);
                }
            }
        }
    }

    fn established(&self, session_id: &str) -> Result<&VerifierSession, ProtocolError> {
        self.sessions
            .get(session_id)
            .filter(|s| s.status == SessionStatus::Established)
            .ok_or_else(|| ProtocolError::NoSession(session_id.to_owned()))
    }

    /// Step 6.7: decrypt `K_trans` and append it to the database.
    pub fn handle_register<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        now: u64,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::RegisterKey { session_id, sealed }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let session = self.established(&session_id)?;
        if session.registered_key.is_some() {
            return Err(ProtocolError::SessionUsed);
        }
        let psk = session.psk.psk;
        let bytes =
            open(&psk, &session_aad("register", &session_id), &sealed).map_err(|_| ProtocolError::Decryption)?;
        let key = VerifyingKey::from_value(BigUint::from_bytes_be(&bytes));
        let group = &self.require_gpk()?.subgroup;
        if key.value() <= &BigUint::from(1u32) || !group.contains(key.value()) {
            return Err(ProtocolError::InvalidKey);
        }
        self.permissions_db.append(key.clone(), now).map_err(|_| ProtocolError::DuplicateKey)?;
        if let Some(s) = self.sessions.get_mut(&session_id) {
            s.registered_key = Some(key.clone());
        }
        let ack = seal(&psk, &session_aad("register-ack", &session_id), &key.to_bytes(), rng);
        Ok(Envelope::new(&self.domain, ANONYMOUS, "6.7", &Message::RegisterAck { session_id, sealed: ack }))
    }

    /// Step 7: mint `anon<token>@domain` bound to the session's key.
    pub fn handle_identity_request<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        now: u64,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::IdentityRequest { session_id, sealed }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let session = self.established(&session_id)?;
        let psk = session.psk.psk;
        let registered = session.registered_key.clone();
        let bytes = open(&psk, &session_aad("identity-request", &session_id), &sealed)
            .map_err(|_| ProtocolError::Decryption)?;
        let key = VerifyingKey::from_value(BigUint::from_bytes_be(&bytes));
        if registered.as_ref() != Some(&key) {
            return Err(ProtocolError::UnregisteredKey);
        }
        let anon_id = loop {
            let id = format!("anon{:016x}@{}", rng.gen::<u64>(), self.domain);
            if !self.issued_identities.contains_key(&id) {
                break id;
            }
        };
        let signing = AnonymousIdentityCertificate::signing_bytes(&anon_id, &key, now, &self.domain);
        let cert = AnonymousIdentityCertificate {
            anon_id: anon_id.clone(),
            bound_key: key,
            issued_at: now,
            issuer: self.domain.clone(),
            signature: self.identity.sign(&self.system, &signing, rng),
        };
        let body = serde_json::to_vec(&cert).expect("certificates serialize");
        self.issued_identities.insert(anon_id, cert);
        let sealed = seal(&psk, &session_aad("identity", &session_id), &body, rng);
        Ok(Envelope::new(&self.domain, ANONYMOUS, "7", &Message::IdentityIssued { session_id, sealed }))
    }

    /// Records a signed ownership statement for one registered key.
    pub fn handle_disclosure(&mut self, env: &Envelope) -> Result<Envelope, ProtocolError> {
        let Some(Message::Disclosure { key, disclosed_at, signature, identity }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        if !self.permissions_db.contains(&key) {
            return Err(ProtocolError::UnregisteredKey);
        }
        let group = &self.require_gpk()?.subgroup;
        key.verify(group, &disclosure_statement(&self.domain, &key, disclosed_at), &signature)
            .map_err(|_| ProtocolError::BadSignature)?;
        self.disclosures.push(DisclosureRecord { key, disclosed_at, identity });
        Ok(Envelope::new(&self.domain, &env.sender, "disclose", &Message::DisclosureRecorded))
    }
}
