//! The permissions issuer: sets up groups, authenticates users against
//! its account records and runs the issuing side of the blinded join.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::Envelope;
use super::error::ProtocolError;
use super::messages::Message;
use crate::epid::{
    issue_credential, revoke_by_issuer, setup_group, GroupIssuingPrivateKey, GroupPublicKey, RevocationKind,
    RevocationList,
};
use crate::group_math::{ParameterProfile, SchnorrGroup, SubgroupElement, Transcript};
use crate::signature::{KeyPair, VerifyingKey};

/// Bytes a user signs with its identity key to answer an issuer nonce.
pub fn auth_statement(issuer: &str, group_id: &str, account: &str, nonce: &[u8]) -> Vec<u8> {
    Transcript::new("chainanchor/authenticate").bytes(issuer).bytes(group_id).bytes(account).bytes(nonce).encode()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerGroup {
    pub gpk: GroupPublicKey,
    /// Basename for the join pseudonym `K_I = B_I^f`.
    #[serde(with = "crate::group_math::encoding::hex_bytes")]
    pub basename: Vec<u8>,
    /// Authenticated real-world identities of approved members.
    pub roster: BTreeSet<String>,
    /// Outstanding join nonces per account, hex encoded.
    join_nonces: BTreeMap<String, String>,
    pub issuer_rl: RevocationList,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerActor {
    domain: String,
    identity: KeyPair,
    system: SchnorrGroup,
    /// Accounts the provider already knows, with their identity keys.
    accounts: BTreeMap<String, VerifyingKey>,
    auth_nonces: BTreeMap<String, String>,
    groups: BTreeMap<String, IssuerGroup>,
    /// Issuing keys. Never serialized with the actor; see [`Self::vault`].
    #[serde(skip)]
    vault: BTreeMap<String, GroupIssuingPrivateKey>,
}

impl IssuerActor {
    pub fn new<R: Rng + ?Sized>(domain: &str, system: SchnorrGroup, rng: &mut R) -> Self {
        let identity = KeyPair::generate(&system, rng);
        Self {
            domain: domain.to_owned(),
            identity,
            system,
            accounts: BTreeMap::new(),
            auth_nonces: BTreeMap::new(),
            groups: BTreeMap::new(),
            vault: BTreeMap::new(),
        }
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn public_key(&self) -> &VerifyingKey {
        self.identity.public()
    }

    pub fn system_group(&self) -> &SchnorrGroup {
        &self.system
    }

    pub fn provision_account(&mut self, account: &str, key: VerifyingKey) {
        self.accounts.insert(account.to_owned(), key);
    }

    pub fn group(&self, group_id: &str) -> Option<&IssuerGroup> {
        self.groups.get(group_id)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&String, &IssuerGroup)> {
        self.groups.iter()
    }

    /// Issuing keys by group id, for storage apart from the actor.
    pub fn vault(&self) -> &BTreeMap<String, GroupIssuingPrivateKey> {
        &self.vault
    }

    pub fn restore_vault(&mut self, vault: BTreeMap<String, GroupIssuingPrivateKey>) {
        self.vault = vault;
    }

    /// Step 0: generate the group key pair and keep both halves.
    pub fn establish_group<R: Rng + ?Sized>(
        &mut self,
        group_id: &str,
        profile: &ParameterProfile,
        rng: &mut R,
    ) -> Result<&GroupPublicKey, ProtocolError> {
        if self.groups.contains_key(group_id) {
            return Err(ProtocolError::DuplicateGroup(group_id.to_owned()));
        }
        let (gpk, gipk) = setup_group(profile, rng)?;
        let group = IssuerGroup {
            gpk,
            basename: format!("{}/{}", self.domain, group_id).into_bytes(),
            roster: BTreeSet::new(),
            join_nonces: BTreeMap::new(),
            issuer_rl: RevocationList::new(RevocationKind::Issuer),
        };
        self.vault.insert(group_id.to_owned(), gipk);
        Ok(&self.groups.entry(group_id.to_owned()).or_insert(group).gpk)
    }

    fn group_mut(&mut self, group_id: &str) -> Result<&mut IssuerGroup, ProtocolError> {
        self.groups.get_mut(group_id).ok_or_else(|| ProtocolError::UnknownGroup(group_id.to_owned()))
    }

    /// Step 1: the group public key, signed, addressed to `recipient`.
    pub fn gpk_envelope<R: Rng + ?Sized>(
        &self,
        group_id: &str,
        recipient: &str,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let group = self.group(group_id).ok_or_else(|| ProtocolError::UnknownGroup(group_id.to_owned()))?;
        let msg = Message::GroupKey { group_id: group_id.to_owned(), gpk: group.gpk.clone() };
        Ok(Envelope::new(&self.domain, recipient, "1", &msg).signed(&self.identity, &self.system, rng))
    }

    /// Current issuer revocation list, signed.
    pub fn issuer_rl_envelope<R: Rng + ?Sized>(
        &self,
        group_id: &str,
        recipient: &str,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let group = self.group(group_id).ok_or_else(|| ProtocolError::UnknownGroup(group_id.to_owned()))?;
        let msg = Message::IssuerRevocations { group_id: group_id.to_owned(), list: group.issuer_rl.clone() };
        Ok(Envelope::new(&self.domain, recipient, "rl", &msg).signed(&self.identity, &self.system, rng))
    }

    /// Step 2, first half: answer a hello with a fresh nonce.
    pub fn handle_auth_hello<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::AuthHello { account, group_id }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        if account != env.sender || !self.accounts.contains_key(&account) {
            return Err(ProtocolError::AuthenticationFailed);
        }
        self.group_mut(&group_id)?;
        let nonce: [u8; 32] = rng.gen();
        self.auth_nonces.insert(account.clone(), hex::encode(nonce));
        let reply = Message::AuthChallenge { nonce: nonce.to_vec() };
        Ok(Envelope::new(&self.domain, &account, "2", &reply))
    }

    /// Step 2, second half: check the signed nonce, record the member and
    /// return an approval with the group key and a join nonce.
    pub fn handle_auth_response<R: Rng + ?Sized>(
        &mut self,
        env: &Envelope,
        rng: &mut R,
    ) -> Result<Envelope, ProtocolError> {
        let Some(Message::AuthResponse { account, group_id, nonce, signature }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        if account != env.sender {
            return Err(ProtocolError::AuthenticationFailed);
        }
        let expected = self.auth_nonces.remove(&account).ok_or(ProtocolError::AuthenticationFailed)?;
        if expected != hex::encode(&nonce) {
            return Err(ProtocolError::AuthenticationFailed);
        }
        let key = self.accounts.get(&account).ok_or(ProtocolError::AuthenticationFailed)?;
        key.verify(&self.system, &auth_statement(&self.domain, &group_id, &account, &nonce), &signature)
            .map_err(|_| ProtocolError::AuthenticationFailed)?;

        let domain = self.domain.clone();
        let group = self.group_mut(&group_id)?;
        group.roster.insert(account.clone());
        let join_nonce: [u8; 32] = rng.gen();
        group.join_nonces.insert(account.clone(), hex::encode(join_nonce));
        let reply = Message::Approval {
            group_id,
            gpk: group.gpk.clone(),
            join_nonce: join_nonce.to_vec(),
            issuer_basename: group.basename.clone(),
        };
        Ok(Envelope::new(&domain, &account, "2", &reply).signed(&self.identity, &self.system, rng))
    }

    /// Step 4: verify the blinded commitment and return `(A, e, v'')`.
    pub fn handle_join<R: Rng + ?Sized>(&mut self, env: &Envelope, rng: &mut R) -> Result<Envelope, ProtocolError> {
        let Some(Message::Join { group_id, request }) = env.message() else {
            return Err(ProtocolError::Malformed);
        };
        let account = env.sender.clone();
        let domain = self.domain.clone();
        let gipk = self.vault.get(&group_id).cloned().ok_or_else(|| ProtocolError::UnknownGroup(group_id.clone()))?;
        let group = self.group_mut(&group_id)?;
        if !group.roster.contains(&account) {
            return Err(ProtocolError::NotApproved);
        }
        let nonce = group.join_nonces.remove(&account).ok_or(ProtocolError::NotApproved)?;
        let nonce = hex::decode(nonce).map_err(|_| ProtocolError::Malformed)?;
        let response = issue_credential(&group.gpk, &gipk, &group.basename, &request, &nonce, rng)?;
        let reply = Message::Credential { group_id, response };
        Ok(Envelope::new(&domain, &account, "4", &reply))
    }

    /// Adds `(B, K)` to the issuer list. Returns false if already present.
    pub fn revoke(
        &mut self,
        group_id: &str,
        base: SubgroupElement,
        pseudonym: SubgroupElement,
    ) -> Result<bool, ProtocolError> {
        let group = self.group_mut(group_id)?;
        let next = revoke_by_issuer(&group.issuer_rl, base, pseudonym);
        let changed = next != group.issuer_rl;
        group.issuer_rl = next;
        Ok(changed)
    }
}
