//! The user: authenticates to the issuer, joins, and anonymously proves
//! membership to the verifier once per transaction key.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{open, seal, Envelope};
use super::error::ProtocolError;
use super::issuer::auth_statement;
use super::messages::Message;
use super::session::{
    derive_psk, disclosure_statement, session_aad, AnonymousIdentityCertificate, PskInputs, PskSession,
};
use super::{proof_message, ANONYMOUS};
use crate::epid::{
    complete_join, join_request, sign_membership, validate_gpk, BaseMode, GroupPublicKey, JoinState, RevocationList,
    SignError, UserMemberPrivateKey,
};
use crate::group_math::encoding::{hex_bytes, hex_uint};
use crate::group_math::{SchnorrGroup, SubgroupElement};
use crate::signature::{KeyPair, VerifyingKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionKey {
    pub keypair: KeyPair,
    /// Session in which this key was registered, if any.
    pub registered_session: Option<String>,
    pub certificate: Option<AnonymousIdentityCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approval {
    pub group_id: String,
    pub gpk: GroupPublicKey,
    #[serde(with = "hex_bytes")]
    pub join_nonce: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub issuer_basename: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceivedChallenge {
    #[serde(with = "hex_bytes")]
    pub message: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub nonce: Vec<u8>,
    pub expires_at: u64,
    pub sig_rl: RevocationList,
    pub issuer_rl: RevocationList,
}

/// Prover state between sending `σ` and receiving the verifier's share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PendingProof {
    session_id: String,
    #[serde(with = "hex_uint")]
    exponent: BigUint,
    share: SubgroupElement,
    #[serde(with = "hex_bytes")]
    signature_digest: [u8; 32],
    challenge: ReceivedChallenge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserActor {
    account: String,
    identity: KeyPair,
    system: SchnorrGroup,
    issuer_domain: String,
    issuer_key: VerifyingKey,
    verifier_key: VerifyingKey,
    approval: Option<Approval>,
    /// Group key obtained from a public source, without membership.
    public_gpk: Option<GroupPublicKey>,
    pending_join: Option<JoinState>,
    member_keys: Vec<UserMemberPrivateKey>,
    transaction_keys: Vec<TransactionKey>,
    challenges: BTreeMap<String, ReceivedChallenge>,
    pending_proof: Option<PendingProof>,
    /// Sessions whose key agreement completed on our side but is not yet
    /// acknowledged by the verifier.
    unconfirmed: BTreeMap<String, PskSession>,
    psk_sessions: BTreeMap<String, PskSession>,
}

impl UserActor {
    pub fn new<R: Rng + ?Sized>(
        account: &str,
        system: SchnorrGroup,
        issuer_domain: &str,
        issuer_key: VerifyingKey,
        verifier_key: VerifyingKey,
        rng: &mut R,
    ) -> Self {
        let identity = KeyPair::generate(&system, rng);
        Self {
            account: account.to_owned(),
            identity,
            system,
            issuer_domain: issuer_domain.to_owned(),
            issuer_key,
            verifier_key,
            approval: None,
            public_gpk: None,
            pending_join: None,
            member_keys: Vec::new(),
            transaction_keys: Vec::new(),
            challenges: BTreeMap::new(),
            pending_proof: None,
            unconfirmed: BTreeMap::new(),
            psk_sessions: BTreeMap::new(),
        }
    }

    pub fn account(&self) -> &str {
        &self.account
    }

    pub fn identity_key(&self) -> &VerifyingKey {
        self.identity.public()
    }

    pub fn approval(&self) -> Option<&Approval> {
        self.approval.as_ref()
    }

    pub fn member_keys(&self) -> &[UserMemberPrivateKey] {
        &self.member_keys
    }

    pub fn transaction_keys(&self) -> &[TransactionKey] {
        &self.transaction_keys
    }

    pub fn transaction_key(&self, index: usize) -> Result<&TransactionKey, ProtocolError> {
        self.transaction_keys.get(index).ok_or(ProtocolError::UnknownKeyIndex(index))
    }

    pub fn psk_sessions(&self) -> &BTreeMap<String, PskSession> {
        &self.psk_sessions
    }

    fn gpk(&self) -> Result<&GroupPublicKey, ProtocolError> {
        self.approval.as_ref().map(|a| &a.gpk).ok_or(ProtocolError::MissingStep("2"))
    }

    /// Records the published group key. Enough to create transaction keys,
    /// not to prove membership.
    pub fn learn_group_key(&mut self, gpk: GroupPublicKey) -> Result<(), ProtocolError> {
        validate_gpk(&gpk)?;
        self.public_gpk = Some(gpk);
        Ok(())
    }

    /// Step 2: open authentication with the issuer.
    pub fn auth_hello(&self, group_id: &str) -> Envelope {
        let msg = Message::AuthHello { account: self.account.clone(), group_id: group_id.to_owned() };
        Envelope::new(&self.account, &self.issuer_domain, "2", &msg)
    }

    pub fn handle_auth_challenge<R: Rng + ?Sized>(
        &self,
        env: &Envelope,
        group_id: &str,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::AuthChallenge { nonce }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let statement = auth_statement(&self.issuer_domain, group_id, &self.account, &nonce);
        let msg = Message::AuthResponse {
            account: self.account.clone(),
            group_id: group_id.to_owned(),
            signature: self.identity.sign(&self.system, &statement, rng),
            nonce,
        };
        Ok(Envelope::new(&self.account, &self.issuer_domain, "2", &msg))
    }

    /// Step 2: accept the signed approval carrying the group key.
    pub fn handle_approval(&mut self, env: &Envelope) -> Result<(), ProtocolError> {
        if let Some(Message::Rejected { reason, .. }) = env.message() {
            return Err(ProtocolError::Remote(reason));
        }
        env.verify_signature(&self.issuer_key, &self.system).map_err(|_| ProtocolError::BadSignature)?;
        let Some(Message::Approval { group_id, gpk, join_nonce, issuer_basename }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        validate_gpk(&gpk)?;
        self.approval = Some(Approval { group_id, gpk, join_nonce, issuer_basename });
        Ok(())
    }

    /// Step 3: blinded commitment to a fresh secret `f`.
    pub fn join_request<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Envelope, ProtocolError> {
        let approval = self.approval.as_ref().ok_or(ProtocolError::MissingStep("2"))?;
        let (state, request) = join_request(&approval.gpk, &approval.issuer_basename, &approval.join_nonce, rng)?;
        let msg = Message::Join { group_id: approval.group_id.clone(), request };
        self.pending_join = Some(state);
        Ok(Envelope::new(&self.account, &self.issuer_domain, "3", &msg))
    }

    /// Step 5: unblind the credential, store the member key and create a
    /// first transaction key pair. Returns the index of the member key.
    pub fn handle_credential<R: Rng + ?Sized>(&mut self, env: &Envelope, rng: &mut R) -> Result<usize, ProtocolError> {
        if let Some(Message::Rejected { reason, .. }) = env.message() {
            return Err(ProtocolError::Remote(reason));
        }
        let Some(Message::Credential { response, .. }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let state = self.pending_join.take().ok_or(ProtocolError::MissingStep("3"))?;
        let key = complete_join(&state, &response, self.gpk()?)?;
        self.member_keys.push(key);
        self.new_transaction_key(rng)?;
        Ok(self.member_keys.len() - 1)
    }

    /// A fresh `(K_trans, K_trans⁻¹)` over the group's prime-order subgroup.
    pub fn new_transaction_key<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize, ProtocolError> {
        let gpk = match (&self.approval, &self.public_gpk) {
            (Some(a), _) => &a.gpk,
            (None, Some(g)) => g,
            (None, None) => return Err(ProtocolError::MissingStep("1")),
        };
        let keypair = KeyPair::generate(&gpk.subgroup, rng);
        self.transaction_keys.push(TransactionKey { keypair, registered_session: None, certificate: None });
        Ok(self.transaction_keys.len() - 1)
    }

    /// Step 6.1.
    pub fn request_challenge(&self, verifier: &str) -> Envelope {
        Envelope::new(ANONYMOUS, verifier, "6.1", &Message::ChallengeRequest)
    }

    /// Step 6.2, receiving side. Returns the session id.
    pub fn handle_challenge(&mut self, env: &Envelope) -> Result<String, ProtocolError> {
        let Some(Message::Challenge { session_id, message, nonce, expires_at, sig_rl, issuer_rl }) = env.message()
        else {
            return Err(ProtocolError::Malformed);
        };
        self.challenges.insert(session_id.clone(), ReceivedChallenge { message, nonce, expires_at, sig_rl, issuer_rl });
        Ok(session_id)
    }

    /// Step 6.3: `σ` over `(m, X)` under `n_pv`, plus the DH share `X`.
    pub fn prove<R: Rng + ?Sized>(
        &mut self,
        session_id: &str,
        member_key: usize,
        verifier: &str,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let gpk = self.gpk()?;
        let sk = match self.member_keys.get(member_key) {
            Some(sk) => sk,
            None if self.member_keys.is_empty() => return Err(ProtocolError::MissingStep("3-5")),
            None => return Err(ProtocolError::UnknownKeyIndex(member_key)),
        };
        let challenge = self.challenges.get(session_id).ok_or(ProtocolError::UnknownChallenge)?;
        let group = &gpk.subgroup;
        let exponent = group.random_exponent(rng);
        let share = group.pow(&group.generator(), &exponent);
        let signature = sign_membership(
            sk,
            gpk,
            &proof_message(&challenge.message, &share),
            &challenge.nonce,
            &BaseMode::Random,
            &challenge.sig_rl,
            &challenge.issuer_rl,
            rng,
        )
        .map_err(|e| match e {
            SignError::Revoked(_) => ProtocolError::Revoked,
            other => ProtocolError::Remote(other.to_string()),
        })?;
        let challenge = self.challenges.remove(session_id).expect("checked above");
        self.pending_proof = Some(PendingProof {
            session_id: session_id.to_owned(),
            exponent,
            share: share.clone(),
            signature_digest: signature.digest(),
            challenge,
        });
        let msg = Message::MembershipProof { session_id: session_id.to_owned(), signature, share };
        Ok(Envelope::new(ANONYMOUS, verifier, "6.3", &msg))
    }

    /// Step 6.4-6.5: derive the PSK from the verifier's share, check its
    /// confirmation tag and signature, and answer with our own tag.
    pub fn handle_proof_response<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let pending = self.pending_proof.take().ok_or(ProtocolError::MissingStep("6.3"))?;
        let msg = env.message().ok_or(ProtocolError::Malformed)?;
        let (session_id, share, confirm) = match msg {
            Message::ProofAccepted { session_id, share, confirm } => (session_id, share, confirm),
            Message::Rejected { reason, .. } => return Err(ProtocolError::Remote(reason)),
            _ => return Err(ProtocolError::Malformed),
        };
        if session_id != pending.session_id {
            return Err(ProtocolError::UnknownChallenge);
        }
        let group = &self.gpk()?.subgroup;
        if share.is_identity() || !group.contains(share.value()) {
            return Err(ProtocolError::KeyAgreement);
        }
        let psk = derive_psk(
            &group.pow(&share, &pending.exponent),
            &PskInputs {
                session_id: &session_id,
                signature_digest: &pending.signature_digest,
                message: &pending.challenge.message,
                nonce: &pending.challenge.nonce,
                user_share: &pending.share,
                verifier_share: &share,
            },
        );
        let opened = open(&psk.psk, &session_aad("confirm/verifier", &session_id), &confirm);
        if opened.as_deref() != Ok(&psk.transcript_hash[..]) {
            return Err(ProtocolError::KeyAgreement);
        }
        env.verify_signature(&self.verifier_key, &self.system).map_err(|_| ProtocolError::BadSignature)?;
        let tag = seal(&psk.psk, &session_aad("confirm/user", &session_id), &psk.transcript_hash, rng);
        self.unconfirmed.insert(session_id.clone(), psk);
        let reply = Message::KeyConfirm { session_id, confirm: tag };
        Ok(Envelope::new(ANONYMOUS, &env.sender, "6.5", &reply))
    }

    /// Step 6.6: the verifier accepted our tag; the session is usable.
    pub fn handle_session_established(&mut self, env: &Envelope) -> Result<PskSession, ProtocolError> {
        match env.message() {
            Some(Message::SessionEstablished { session_id }) => {
                let psk =
                    self.unconfirmed.remove(&session_id).ok_or_else(|| ProtocolError::NoSession(session_id.clone()))?;
                self.psk_sessions.insert(session_id, psk.clone());
                Ok(psk)
            }
            Some(Message::Rejected { session_id, reason }) => {
                if let Some(id) = session_id {
                    self.unconfirmed.remove(&id);
                }
                Err(ProtocolError::Remote(reason))
            }
            _ => Err(ProtocolError::Malformed),
        }
    }

    fn session(&self, session_id: &str) -> Result<&PskSession, ProtocolError> {
        self.psk_sessions.get(session_id).ok_or_else(|| ProtocolError::NoSession(session_id.to_owned()))
    }

    /// Step 6.7: `K_trans` sealed under the session key.
    pub fn register_key<R: Rng + ?Sized>(
        &self,
        session_id: &str,
        key_index: usize,
        verifier: &str,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let psk = self.session(session_id)?;
        let key = self.transaction_key(key_index)?.keypair.public();
        let sealed = seal(&psk.psk, &session_aad("register", session_id), &key.to_bytes(), rng);
        let msg = Message::RegisterKey { session_id: session_id.to_owned(), sealed };
        Ok(Envelope::new(ANONYMOUS, verifier, "6.7", &msg))
    }

    pub fn handle_register_ack(&mut self, env: &Envelope, key_index: usize) -> Result<(), ProtocolError> {
        let (session_id, sealed) = match env.message() {
            Some(Message::RegisterAck { session_id, sealed }) => (session_id, sealed),
            Some(Message::Rejected { reason, .. }) => return Err(ProtocolError::Remote(reason)),
            _ => return Err(ProtocolError::Malformed),
        };
        let psk = self.session(&session_id)?;
        let body = open(&psk.psk, &session_aad("register-ack", &session_id), &sealed)
            .map_err(|_| ProtocolError::Decryption)?;
        let key = self.transaction_key(key_index)?;
        if body != key.keypair.public().to_bytes() {
            return Err(ProtocolError::Malformed);
        }
        self.transaction_keys[key_index].registered_session = Some(session_id);
        Ok(())
    }

    /// Step 7 request: ask for an anonymous identity bound to the key
    /// registered in this session.
    pub fn identity_request<R: Rng + ?Sized>(
        &self,
        key_index: usize,
        verifier: &str,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let key = self.transaction_key(key_index)?;
        let session_id = key.registered_session.as_deref().ok_or(ProtocolError::MissingStep("6.7"))?;
        let psk = self.session(session_id)?;
        let sealed =
            seal(&psk.psk, &session_aad("identity-request", session_id), &key.keypair.public().to_bytes(), rng);
        let msg = Message::IdentityRequest { session_id: session_id.to_owned(), sealed };
        Ok(Envelope::new(ANONYMOUS, verifier, "7", &msg))
    }

    pub fn handle_identity(
        &mut self,
        env: &Envelope,
        key_index: usize,
    ) -> Result<AnonymousIdentityCertificate, ProtocolError> {
        let (session_id, sealed) = match env.message() {
            Some(Message::IdentityIssued { session_id, sealed }) => (session_id, sealed),
            Some(Message::Rejected { reason, .. }) => return Err(ProtocolError::Remote(reason)),
            _ => return Err(ProtocolError::Malformed),
        };
        let psk = self.session(&session_id)?;
        let body =
            open(&psk.psk, &session_aad("identity", &session_id), &sealed).map_err(|_| ProtocolError::Decryption)?;
        let cert: AnonymousIdentityCertificate = serde_json::from_slice(&body).map_err(|_| ProtocolError::Malformed)?;
        cert.verify(&self.system, &self.verifier_key).map_err(|_| ProtocolError::BadSignature)?;
        if cert.bound_key != *self.transaction_key(key_index)?.keypair.public() {
            return Err(ProtocolError::Malformed);
        }
        self.transaction_keys[key_index].certificate = Some(cert.clone());
        Ok(cert)
    }

    /// Proof of control over one transaction key, optionally naming the
    /// account behind it.
    pub fn disclose<R: Rng + ?Sized>(
        &self,
        key_index: usize,
        verifier: &str,
        now: u64,
        attach_identity: bool,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let group = &self.gpk()?.subgroup;
        let key = &self.transaction_key(key_index)?.keypair;
        let statement = disclosure_statement(verifier, key.public(), now);
        let msg = Message::Disclosure {
            key: key.public().clone(),
            disclosed_at: now,
            signature: key.sign(group, &statement, rng),
            identity: attach_identity.then(|| self.account.clone()),
        };
        let sender = if attach_identity { self.account.as_str() } else { ANONYMOUS };
        Ok(Envelope::new(sender, verifier, "disclose", &msg))
    }
}
