//! The persisted simulation world and the commands that advance it.

use std::collections::{BTreeMap, BTreeSet};

use chainanchor::epid::GroupIssuingPrivateKey;
use chainanchor::group_math::encoding::from_hex;
use chainanchor::group_math::{gen_schnorr_group, ParameterProfile, SchnorrGroup, SubgroupElement};
use chainanchor::ledger::{
    create_transaction, validator_audit, Block, MembershipOracle, SimError, Simulation, NOT_A_MEMBER,
};
use chainanchor::roles::{
    pi_establish_group, pi_publish_issuer_rl, pi_share_gpk, pv_challenge, pv_issue_anonymous_identity,
    register_transaction_key, user_disclose_key, user_join_group, user_prove_membership, user_request_membership,
    IssuerActor, Message, Network, ProtocolError, UserActor, VerifierActor,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ISSUER_DOMAIN: &str = "idp-issuer.com";
pub const VERIFIER_DOMAIN: &str = "idp-verifier.com";
pub const FORMAT_VERSION: u32 = 1;

/// ChaCha20 stream that serializes as `(seed, word position)`.
#[derive(Debug, Clone)]
pub struct WorldRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl WorldRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha20Rng::seed_from_u64(seed) }
    }
}

impl PartialEq for WorldRng {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.inner.get_word_pos() == other.inner.get_word_pos()
    }
}

impl RngCore for WorldRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[derive(Serialize, Deserialize)]
struct RngRepr {
    seed: u64,
    word_pos: String,
}

impl Serialize for WorldRng {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RngRepr { seed: self.seed, word_pos: self.inner.get_word_pos().to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WorldRng {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = RngRepr::deserialize(d)?;
        let pos: u128 = repr.word_pos.parse().map_err(serde::de::Error::custom)?;
        let mut rng = WorldRng::new(repr.seed);
        rng.inner.set_word_pos(pos);
        Ok(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ListChoice {
    Sig,
    Issuer,
}

/// One state-changing command. The world keeps a log of these for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "kebab-case")]
pub enum Command {
    AddNode { node: String, dishonest: bool },
    AddUser { user: String },
    Enroll { user: String },
    Join { user: String },
    Prove { user: String, member_key: usize },
    Register { user: String, key: Option<usize> },
    Identity { user: String, key: usize },
    Keygen { user: String },
    Tx { user: String, key: usize, payload: String },
    Mine { node: String },
    Audit { block: String },
    Revoke { base: String, pseudonym: String, list: ListChoice },
    Disclose { user: String, key: usize, with_identity: bool },
    Advance { ticks: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub actor: UserActor,
    /// Established session ids, oldest first.
    pub sessions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub format: u32,
    pub profile: ParameterProfile,
    pub group_id: String,
    pub seed: u64,
    rng: WorldRng,
    pub clock: u64,
    pub system: SchnorrGroup,
    pub issuer: IssuerActor,
    /// Issuing keys, stored apart from the issuer's exportable state.
    pub issuer_vault: BTreeMap<String, GroupIssuingPrivateKey>,
    pub verifier: VerifierActor,
    pub users: BTreeMap<String, UserRecord>,
    pub sim: Simulation,
    pub network: Network,
    pub transcript: Vec<String>,
    pub command_log: Vec<Command>,
}

fn short(s: &str) -> &str {
    &s[..s.len().min(16)]
}

fn protocol(e: impl ToString) -> CliError {
    CliError::Protocol(e.to_string())
}

fn account_of(user: &str) -> String {
    format!("{user}@{ISSUER_DOMAIN}")
}

/// Adds a hint naming the command that performs a missing step.
fn step_error(e: ProtocolError) -> CliError {
    let hint = match &e {
        ProtocolError::MissingStep("1") => " (setup)",
        ProtocolError::MissingStep("2") => " (enroll)",
        ProtocolError::MissingStep("3" | "3-5") => " (join)",
        ProtocolError::MissingStep("6.3") => " (prove)",
        ProtocolError::MissingStep("6.7") => " (register)",
        _ => "",
    };
    CliError::Protocol(format!("{e}{hint}"))
}

impl WorldState {
    /// Steps 0 and 1, plus two honest consensus nodes.
    pub fn setup(profile: ParameterProfile, seed: u64, group_id: &str) -> Result<Self, CliError> {
        profile.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let mut rng = WorldRng::new(seed);
        let system = gen_schnorr_group(&profile, &mut rng).map_err(protocol)?;
        let mut issuer = IssuerActor::new(ISSUER_DOMAIN, system.clone(), &mut rng);
        let mut verifier = VerifierActor::new(VERIFIER_DOMAIN, system.clone(), issuer.public_key().clone(), &mut rng);
        let mut network = Network::new();
        pi_establish_group(&mut issuer, group_id, &profile, &mut rng).map_err(protocol)?;
        pi_share_gpk(&issuer, &mut verifier, group_id, &mut network, &mut rng).map_err(protocol)?;
        let mut sim = Simulation::new();
        for node in ["node-0", "node-1"] {
            sim.add_node(node, false).map_err(protocol)?;
        }
        let issuer_vault = issuer.vault().clone();
        let mut world = WorldState {
            format: FORMAT_VERSION,
            group_id: group_id.to_owned(),
            seed,
            rng,
            clock: 0,
            system,
            issuer,
            issuer_vault,
            verifier,
            users: BTreeMap::new(),
            sim,
            network,
            transcript: Vec::new(),
            command_log: Vec::new(),
            profile,
        };
        let n_bits = world.gpk().modulus.bits();
        world.line(
            "0",
            format!(
                "{ISSUER_DOMAIN} established group {group_id} (profile {}, N of {n_bits} bits)",
                world.profile.name
            ),
        );
        world.line("1", format!("{ISSUER_DOMAIN} -> {VERIFIER_DOMAIN}: group public key delivered and validated"));
        world.line("net", "node-0 joined (honest)".into());
        world.line("net", "node-1 joined (honest)".into());
        Ok(world)
    }

    pub fn gpk(&self) -> &chainanchor::epid::GroupPublicKey {
        &self.issuer.group(&self.group_id).expect("group exists after setup").gpk
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut world: WorldState =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("cannot read world file: {e}")))?;
        if world.format != FORMAT_VERSION {
            return Err(CliError::Usage(format!("unsupported world format {}", world.format)));
        }
        world.issuer.restore_vault(world.issuer_vault.clone());
        Ok(world)
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn state_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("world serializes")))
    }

    fn line(&mut self, step: &str, text: String) {
        self.transcript.push(format!("[{step}] {text}"));
    }

    fn user(&self, name: &str) -> Result<&UserRecord, CliError> {
        self.users.get(name).ok_or_else(|| CliError::Usage(format!("unknown user {name}")))
    }

    fn require_user(&self, name: &str) -> Result<(), CliError> {
        self.user(name).map(|_| ())
    }

    fn new_user(&mut self, name: &str) -> Result<(), CliError> {
        if name.is_empty() || name.contains(char::is_whitespace) || name.contains('@') {
            return Err(CliError::Usage(format!("invalid user name {name:?}")));
        }
        let mut actor = UserActor::new(
            &account_of(name),
            self.system.clone(),
            ISSUER_DOMAIN,
            self.issuer.public_key().clone(),
            self.verifier.public_key().clone(),
            &mut self.rng,
        );
        actor.learn_group_key(self.gpk().clone()).map_err(protocol)?;
        self.users.insert(name.to_owned(), UserRecord { actor, sessions: Vec::new() });
        Ok(())
    }

    /// Runs one command. Usage errors leave the world untouched; protocol
    /// errors keep whatever state the failed exchange produced and are
    /// logged like any other command. Returns the new transcript lines.
    pub fn execute(&mut self, cmd: &Command) -> Result<Vec<String>, CliError> {
        let before = self.clone();
        let start = self.transcript.len();
        self.clock += 1;
        self.command_log.push(cmd.clone());
        match self.apply(cmd) {
            Ok(()) => Ok(self.transcript[start..].to_vec()),
            Err(CliError::Usage(m)) => {
                *self = before;
                Err(CliError::Usage(m))
            }
            Err(e) => {
                self.line("error", e.to_string());
                Err(e)
            }
        }
    }

    fn apply(&mut self, cmd: &Command) -> Result<(), CliError> {
        match cmd {
            Command::AddNode { node, dishonest } => {
                self.sim.add_node(node, *dishonest).map_err(|e| CliError::Usage(e.to_string()))?;
                let kind = if *dishonest { "dishonest" } else { "honest" };
                self.line("net", format!("{node} joined ({kind})"));
            }
            Command::AddUser { user } => {
                if self.users.contains_key(user) {
                    return Err(CliError::Usage(format!("user {user} exists")));
                }
                self.new_user(user)?;
                self.line("net", format!("{user} obtained the published group key (no account at {ISSUER_DOMAIN})"));
            }
            Command::Enroll { user } => self.enroll(user)?,
            Command::Join { user } => self.join(user)?,
            Command::Prove { user, member_key } => self.prove(user, *member_key)?,
            Command::Register { user, key } => self.register(user, *key)?,
            Command::Identity { user, key } => self.identity(user, *key)?,
            Command::Keygen { user } => {
                self.require_user(user)?;
                let rec = self.users.get_mut(user).expect("checked");
                let idx = rec.actor.new_transaction_key(&mut self.rng).map_err(step_error)?;
                self.line("5", format!("{user} generated transaction key #{idx}"));
            }
            Command::Tx { user, key, payload } => self.tx(user, *key, payload)?,
            Command::Mine { node } => self.mine(node)?,
            Command::Audit { block } => self.audit(block)?,
            Command::Revoke { base, pseudonym, list } => self.revoke(base, pseudonym, *list)?,
            Command::Disclose { user, key, with_identity } => {
                self.require_user(user)?;
                let now = self.clock;
                let rec = self.users.get(user).expect("checked");
                rec.actor.transaction_key(*key).map_err(|e| CliError::Usage(e.to_string()))?;
                let record = user_disclose_key(
                    &rec.actor,
                    &mut self.verifier,
                    *key,
                    *with_identity,
                    &mut self.network,
                    now,
                    &mut self.rng,
                )
                .map_err(protocol)?;
                let who = if *with_identity { format!(" as {}", account_of(user)) } else { String::new() };
                self.line("disclose", format!("{user} disclosed key #{key} ({}){who}", short(&record.key.to_hex())));
            }
            Command::Advance { ticks } => {
                self.clock += ticks;
                self.line("clock", format!("advanced to {}", self.clock));
            }
        }
        Ok(())
    }

    fn enroll(&mut self, user: &str) -> Result<(), CliError> {
        if !self.users.contains_key(user) {
            self.new_user(user)?;
            let rec = &self.users[user];
            self.issuer.provision_account(rec.actor.account(), rec.actor.identity_key().clone());
        }
        let rec = self.users.get_mut(user).expect("present");
        let group_id = self.group_id.clone();
        user_request_membership(&mut rec.actor, &mut self.issuer, &group_id, &mut self.network, &mut self.rng)
            .map_err(protocol)?;
        self.line("2", format!("{} authenticated to {ISSUER_DOMAIN}; membership approved", account_of(user)));
        Ok(())
    }

    fn join(&mut self, user: &str) -> Result<(), CliError> {
        self.require_user(user)?;
        let rec = self.users.get_mut(user).expect("checked");
        let before_keys = rec.actor.transaction_keys().len();
        let idx =
            user_join_group(&mut rec.actor, &mut self.issuer, &mut self.network, &mut self.rng).map_err(step_error)?;
        let tx_idx = rec.actor.transaction_keys().len() - 1;
        debug_assert_eq!(tx_idx, before_keys);
        let e_bits = rec.actor.member_keys()[idx].e.bits();
        self.line("3", format!("{user} sent a blinded commitment to {ISSUER_DOMAIN}"));
        self.line("4", format!("{ISSUER_DOMAIN} issued a credential with a {e_bits}-bit prime e"));
        self.line("5", format!("{user} derived member key #{idx} and transaction key #{tx_idx}"));
        Ok(())
    }

    fn prove(&mut self, user: &str, member_key: usize) -> Result<(), CliError> {
        self.require_user(user)?;
        let now = self.clock;
        let rec = self.users.get_mut(user).expect("checked");
        if rec.actor.approval().is_none() {
            return Err(step_error(ProtocolError::MissingStep("2")));
        }
        if rec.actor.member_keys().is_empty() {
            return Err(step_error(ProtocolError::MissingStep("3-5")));
        }
        let sid = pv_challenge(&mut rec.actor, &mut self.verifier, &mut self.network, now, &mut self.rng)
            .map_err(step_error)?;
        self.line("6.1", format!("{user} requested a challenge from {VERIFIER_DOMAIN}"));
        self.line("6.2", format!("{VERIFIER_DOMAIN} issued challenge for session {}", short(&sid)));
        let rec = self.users.get_mut(user).expect("checked");
        match user_prove_membership(
            &mut rec.actor,
            &mut self.verifier,
            &sid,
            member_key,
            &mut self.network,
            now,
            &mut self.rng,
        ) {
            Ok(session) => {
                rec.sessions.push(sid.clone());
                self.line("6.3", format!("{user} sent a membership proof with a fresh random base"));
                self.line("6.4", format!("{VERIFIER_DOMAIN} accepted the proof and answered with its key share"));
                self.line("6.5", format!("{user} confirmed the shared key"));
                self.line(
                    "6.6",
                    format!(
                        "session {} established, transcript {}",
                        short(&sid),
                        short(&hex::encode(session.transcript_hash))
                    ),
                );
                Ok(())
            }
            Err(ProtocolError::Revoked) => {
                self.line("6.3", format!("{user} cannot prove membership: revoked"));
                Err(CliError::Protocol("revoked".into()))
            }
            Err(e) => Err(step_error(e)),
        }
    }

    fn register(&mut self, user: &str, key: Option<usize>) -> Result<(), CliError> {
        let rec = self.user(user)?;
        let keys = rec.actor.transaction_keys();
        let key = match key {
            Some(k) if k < keys.len() => k,
            Some(k) => return Err(CliError::Usage(format!("{user} has no transaction key #{k}"))),
            None => keys
                .iter()
                .position(|k| k.registered_session.is_none())
                .ok_or_else(|| CliError::Usage(format!("{user} has no unregistered transaction key; run keygen")))?,
        };
        let used: BTreeSet<&String> = keys.iter().filter_map(|k| k.registered_session.as_ref()).collect();
        let sid = rec
            .sessions
            .iter()
            .find(|s| !used.contains(s) && self.verifier.session(s).is_some_and(|v| v.registered_key.is_none()))
            .cloned()
            .ok_or_else(|| step_error(ProtocolError::MissingStep("6.3")))?;
        let now = self.clock;
        let rec = self.users.get_mut(user).expect("checked");
        register_transaction_key(&mut rec.actor, &mut self.verifier, &sid, key, &mut self.network, now, &mut self.rng)
            .map_err(protocol)?;
        let k = rec.actor.transaction_keys()[key].keypair.public().to_hex();
        self.line(
            "6.7",
            format!("{user} registered transaction key #{key} ({}) in session {}", short(&k), short(&sid)),
        );
        Ok(())
    }

    fn identity(&mut self, user: &str, key: usize) -> Result<(), CliError> {
        self.require_user(user)?;
        let now = self.clock;
        let rec = self.users.get_mut(user).expect("checked");
        rec.actor.transaction_key(key).map_err(|e| CliError::Usage(e.to_string()))?;
        let cert =
            pv_issue_anonymous_identity(&mut rec.actor, &mut self.verifier, key, &mut self.network, now, &mut self.rng)
                .map_err(step_error)?;
        self.line("7", format!("{user} received anonymous identity {} for key #{key}", cert.anon_id));
        Ok(())
    }

    fn tx(&mut self, user: &str, key: usize, payload: &str) -> Result<(), CliError> {
        let rec = self.user(user)?;
        let kp = rec.actor.transaction_key(key).map_err(|e| CliError::Usage(e.to_string()))?.keypair.clone();
        let group = self.gpk().subgroup.clone();
        let tx = create_transaction(&kp, &group, payload.as_bytes(), self.clock, &mut self.rng);
        let id = tx.txid_hex();
        let fresh = self.sim.submit(&group, tx).map_err(protocol)?;
        let note = if fresh { "" } else { " (duplicate ignored)" };
        self.line("8", format!("{user} submitted tx {} signed with key #{key}{note}", short(&id)));
        Ok(())
    }

    fn mine(&mut self, node: &str) -> Result<(), CliError> {
        if !self.sim.nodes().iter().any(|n| n.node_id == node) {
            return Err(CliError::Usage(format!("unknown node {node}")));
        }
        let fetched = self.sim.pool().len();
        if fetched == 0 {
            self.line("9", format!("{node}: pool empty, nothing to process"));
            return Ok(());
        }
        let dishonest = self.sim.nodes().iter().any(|n| n.node_id == node && n.dishonest);
        let outcome = match self.sim.mine(node, &self.verifier, self.clock) {
            Ok(o) => o,
            Err(SimError::UnknownNode(n)) => return Err(CliError::Usage(format!("unknown node {n}"))),
            Err(e) => return Err(protocol(e)),
        };
        self.line("9", format!("{node} fetched {fetched} transaction(s) from the pool"));
        if dishonest {
            self.line("10", format!("{node} skipped the permissions lookup"));
        } else {
            self.line("10", format!("{node} looked up {fetched} sender key(s) at {VERIFIER_DOMAIN}"));
        }
        match &outcome.block {
            Some(b) => self.line(
                "11",
                format!(
                    "{node} appended block {} {} with {} transaction(s)",
                    b.height,
                    short(&b.hash_hex()),
                    b.transactions.len()
                ),
            ),
            None => self.line("11", format!("{node} produced no block")),
        }
        for d in &outcome.dropped {
            self.line("12", format!("{node} dropped tx {} ({})", short(&hex::encode(d.txid)), d.reason));
        }
        Ok(())
    }

    fn blocks_for(&self, which: &str) -> Result<Vec<Block>, CliError> {
        let chain = self.sim.chain();
        match which {
            "all" => Ok(chain.blocks().to_vec()),
            "latest" => {
                chain.blocks().last().cloned().map(|b| vec![b]).ok_or_else(|| CliError::Usage("chain is empty".into()))
            }
            prefix => {
                let hits: Vec<Block> = chain
                    .blocks()
                    .iter()
                    .filter(|b| !prefix.is_empty() && b.hash_hex().starts_with(prefix))
                    .cloned()
                    .collect();
                match hits.len() {
                    1 => Ok(hits),
                    0 => Err(CliError::Usage(format!("unknown block {prefix}"))),
                    _ => Err(CliError::Usage(format!("ambiguous block prefix {prefix}"))),
                }
            }
        }
    }

    fn audit(&mut self, which: &str) -> Result<(), CliError> {
        for block in self.blocks_for(which)? {
            let report = validator_audit(&self.verifier, &block);
            self.line(
                "audit",
                format!(
                    "{VERIFIER_DOMAIN} audited block {} {} (proposer {}): {} violations",
                    block.height,
                    short(&block.hash_hex()),
                    block.proposer,
                    report.violations.len()
                ),
            );
            for v in &report.violations {
                self.line(
                    "audit",
                    format!("  violation tx {} sender {}", short(&hex::encode(v.txid)), short(&v.sender_key.to_hex())),
                );
            }
        }
        Ok(())
    }

    fn parse_element(&self, s: &str, what: &str) -> Result<SubgroupElement, CliError> {
        let v = from_hex(s).ok_or_else(|| CliError::Usage(format!("{what} is not hex")))?;
        self.gpk().subgroup.element(v).map_err(|_| CliError::Usage(format!("{what} is not a subgroup element")))
    }

    fn revoke(&mut self, base: &str, pseudonym: &str, list: ListChoice) -> Result<(), CliError> {
        let b = self.parse_element(base, "B")?;
        let k = self.parse_element(pseudonym, "K")?;
        let (changed, name, epoch) = match list {
            ListChoice::Sig => {
                let changed = self.verifier.revoke_signature(b, k);
                (changed, "sig-rl", self.verifier.sig_rl().epoch())
            }
            ListChoice::Issuer => {
                let group_id = self.group_id.clone();
                let changed = self.issuer.revoke(&group_id, b, k).map_err(protocol)?;
                pi_publish_issuer_rl(&self.issuer, &mut self.verifier, &group_id, &mut self.network, &mut self.rng)
                    .map_err(protocol)?;
                (changed, "issuer-rl", self.verifier.issuer_rl().epoch())
            }
        };
        if changed {
            self.line("revoke", format!("{name} now at epoch {epoch}: added K={}", short(pseudonym)));
        } else {
            self.line("revoke", format!("{name} already lists K={}; no change", short(pseudonym)));
        }
        Ok(())
    }

    /// `(B, K)` from the membership proof the verifier received in `user`'s
    /// latest session. Driver-side knowledge: the verifier cannot make this
    /// association itself.
    pub fn last_pseudonym(&self, user: &str) -> Result<(String, String), CliError> {
        let rec = self.user(user)?;
        let sid = rec.sessions.last().ok_or_else(|| CliError::Usage(format!("{user} has no session")))?;
        self.network
            .log()
            .iter()
            .filter(|e| e.step == "6.3")
            .filter_map(|e| e.message())
            .find_map(|m| match m {
                Message::MembershipProof { session_id, signature, .. } if session_id == *sid => Some((
                    chainanchor::group_math::encoding::to_hex(signature.base.value()),
                    chainanchor::group_math::encoding::to_hex(signature.pseudonym.value()),
                )),
                _ => None,
            })
            .ok_or_else(|| CliError::Usage(format!("no proof found for {user}")))
    }

    /// Rebuilds the world from setup parameters and the command log.
    pub fn replay(&self) -> Result<WorldState, CliError> {
        let mut world = WorldState::setup(self.profile.clone(), self.seed, &self.group_id)?;
        for cmd in &self.command_log {
            match world.execute(cmd) {
                Ok(_) | Err(CliError::Protocol(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(world)
    }

    /// Transactions processed by honest nodes from keys not in the database
    /// must all be in the drop log as "not-a-member".
    pub fn drop_log_consistent(&self) -> bool {
        self.sim.drop_log().iter().all(|d| d.reason == NOT_A_MEMBER)
            && self.sim.chain().blocks().iter().all(|b| {
                let honest = self.sim.nodes().iter().any(|n| n.node_id == b.proposer && !n.dishonest);
                !honest || b.transactions.iter().all(|t| self.verifier.is_member(&t.sender_key))
            })
    }
}
