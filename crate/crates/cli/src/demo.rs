//! Scripted end-to-end run over three members, an outsider, and one
//! dishonest consensus node, followed by invariant checks.

use std::collections::BTreeSet;

use chainanchor::group_math::ParameterProfile;
use chainanchor::ledger::{validator_audit, TxId};

use crate::error::CliError;
use crate::world::{Command, ListChoice, WorldState, ISSUER_DOMAIN, VERIFIER_DOMAIN};

pub const DEMO_GROUP: &str = "demo-group";
const MEMBERS: [&str; 3] = ["alice", "bob", "carol"];
const OUTSIDER: &str = "mallory";
const DISHONEST_NODE: &str = "node-2";

pub struct DemoReport {
    pub world: WorldState,
    /// Transcript of the whole run, including `[check]` lines.
    pub lines: Vec<String>,
}

struct Runner {
    world: WorldState,
    /// Serialize and reload the world after every command.
    round_trip: bool,
}

impl Runner {
    fn run(&mut self, cmd: Command) -> Result<(), CliError> {
        let out = self.world.execute(&cmd);
        self.reload()?;
        out.map(|_| ())
    }

    fn expect_failure(&mut self, cmd: Command, needle: &str) -> Result<(), CliError> {
        match self.world.execute(&cmd) {
            Err(CliError::Protocol(m)) if m.contains(needle) => self.reload(),
            Err(e) => Err(e),
            Ok(_) => Err(CliError::Invariant(format!("{cmd:?} succeeded but should fail with {needle}"))),
        }
    }

    fn reload(&mut self) -> Result<(), CliError> {
        if self.round_trip {
            self.world = WorldState::from_json(&self.world.to_json())?;
        }
        Ok(())
    }

    fn check(&mut self, ok: bool, what: &str) -> Result<(), CliError> {
        if ok {
            self.world.transcript.push(format!("[check] {what}: ok"));
            Ok(())
        } else {
            self.world.transcript.push(format!("[check] {what}: FAILED"));
            Err(CliError::Invariant(what.to_owned()))
        }
    }
}

fn user(name: &str) -> String {
    name.to_owned()
}

pub fn run_demo(profile: ParameterProfile, seed: u64) -> Result<DemoReport, (CliError, Vec<String>)> {
    run_demo_with(profile, seed, false)
}

/// `round_trip` reloads the world from its serialized form between every
/// command; the transcript must come out identical either way.
pub fn run_demo_with(
    profile: ParameterProfile,
    seed: u64,
    round_trip: bool,
) -> Result<DemoReport, (CliError, Vec<String>)> {
    let world = WorldState::setup(profile, seed, DEMO_GROUP).map_err(|e| (e, Vec::new()))?;
    let mut r = Runner { world, round_trip };
    match script(&mut r) {
        Ok(()) => {
            let lines = r.world.transcript.clone();
            Ok(DemoReport { world: r.world, lines })
        }
        Err(e) => {
            r.world.transcript.push(format!("[error] {e}"));
            Err((e, r.world.transcript))
        }
    }
}

fn mallory_txids(world: &WorldState) -> BTreeSet<TxId> {
    let keys: BTreeSet<_> =
        world.users[OUTSIDER].actor.transaction_keys().iter().map(|k| k.keypair.public().clone()).collect();
    world
        .sim
        .chain()
        .blocks()
        .iter()
        .flat_map(|b| &b.transactions)
        .chain(world.sim.pool().pending())
        .filter(|t| keys.contains(&t.sender_key))
        .map(|t| t.txid)
        .collect()
}

fn script(r: &mut Runner) -> Result<(), CliError> {
    r.run(Command::AddNode { node: DISHONEST_NODE.into(), dishonest: true })?;
    for m in MEMBERS {
        r.run(Command::Enroll { user: user(m) })?;
        r.run(Command::Join { user: user(m) })?;
        r.run(Command::Prove { user: user(m), member_key: 0 })?;
        r.run(Command::Register { user: user(m), key: Some(0) })?;
        r.run(Command::Identity { user: user(m), key: 0 })?;
    }
    r.run(Command::Keygen { user: user("bob") })?;
    r.run(Command::Prove { user: user("bob"), member_key: 0 })?;
    r.run(Command::Register { user: user("bob"), key: Some(1) })?;
    r.run(Command::Identity { user: user("bob"), key: 1 })?;

    r.run(Command::AddUser { user: user(OUTSIDER) })?;
    r.expect_failure(Command::Enroll { user: user(OUTSIDER) }, "authentication")?;
    r.run(Command::Keygen { user: user(OUTSIDER) })?;

    r.run(Command::Tx { user: user("alice"), key: 0, payload: "alice pays bob 5".into() })?;
    r.run(Command::Tx { user: user("bob"), key: 1, payload: "bob pays carol 2".into() })?;
    r.run(Command::Tx { user: user(OUTSIDER), key: 0, payload: "mallory pays mallory 1000".into() })?;
    let first_mallory = mallory_txids(&r.world);
    r.run(Command::Mine { node: "node-0".into() })?;
    let honest_tip = r.world.sim.chain().blocks().last().cloned();
    r.run(Command::Audit { block: "latest".into() })?;

    r.run(Command::Tx { user: user("carol"), key: 0, payload: "carol pays alice 1".into() })?;
    r.run(Command::Tx { user: user(OUTSIDER), key: 0, payload: "mallory pays mallory 2000".into() })?;
    r.run(Command::Tx { user: user(OUTSIDER), key: 0, payload: "mallory pays mallory 3000".into() })?;
    let pending_mallory = mallory_txids(&r.world);
    r.run(Command::Mine { node: DISHONEST_NODE.into() })?;
    let dishonest_block = r.world.sim.chain().blocks().last().cloned();
    r.run(Command::Audit { block: "latest".into() })?;

    let (base, pseudonym) = r.world.last_pseudonym("carol")?;
    r.run(Command::Revoke { base: base.clone(), pseudonym: pseudonym.clone(), list: ListChoice::Sig })?;
    r.run(Command::Revoke { base, pseudonym, list: ListChoice::Sig })?;
    r.expect_failure(Command::Prove { user: user("carol"), member_key: 0 }, "revoked")?;
    r.run(Command::Prove { user: user("alice"), member_key: 0 })?;

    r.run(Command::Disclose { user: user("bob"), key: 1, with_identity: false })?;
    r.run(Command::Tx { user: user("bob"), key: 0, payload: "bob pays alice 3".into() })?;
    r.run(Command::Mine { node: "node-1".into() })?;
    let final_block = r.world.sim.chain().blocks().last().cloned();
    r.run(Command::Audit { block: "all".into() })?;

    checks(r, honest_tip, dishonest_block, (first_mallory, pending_mallory), final_block)
}

fn checks(
    r: &mut Runner,
    honest_tip: Option<chainanchor::ledger::Block>,
    dishonest_block: Option<chainanchor::ledger::Block>,
    (first_mallory, pending_mallory): (BTreeSet<TxId>, BTreeSet<TxId>),
    final_block: Option<chainanchor::ledger::Block>,
) -> Result<(), CliError> {
    let w = &r.world;
    let honest_clean = w
        .sim
        .chain()
        .blocks()
        .iter()
        .filter(|b| b.proposer != DISHONEST_NODE)
        .all(|b| validator_audit(&w.verifier, b).is_compliant());
    let dropped: BTreeSet<TxId> = w.sim.drop_log().iter().map(|d| d.txid).collect();
    let honest_ok = honest_tip.is_some()
        && honest_clean
        && w.drop_log_consistent()
        && dropped == first_mallory
        && !dropped.is_empty();

    let audit_ok = dishonest_block.as_ref().is_some_and(|b| {
        let flagged: BTreeSet<TxId> = validator_audit(&w.verifier, b).violations.iter().map(|v| v.txid).collect();
        b.proposer == DISHONEST_NODE && flagged == pending_mallory && flagged.len() == 2
    });

    let verifier_view = w.network.transcript_for(VERIFIER_DOMAIN);
    let issuer_view = w.network.transcript_for(ISSUER_DOMAIN);
    let accounts_hidden = w.users.values().all(|u| !verifier_view.contains(u.actor.account()));
    let keys_hidden = w
        .users
        .values()
        .flat_map(|u| u.actor.transaction_keys())
        .all(|k| !issuer_view.contains(&k.keypair.public().to_hex()));

    let psk_ok = w.users.values().all(|u| {
        u.sessions.iter().all(|sid| {
            let mine = u.actor.psk_sessions().get(sid).map(|s| s.psk);
            let theirs = w.verifier.session(sid).map(|s| s.psk.psk);
            mine.is_some() && mine == theirs
        })
    });

    let bob = &w.users["bob"].actor;
    let bob0 = bob.transaction_keys()[0].keypair.public().clone();
    let bob1 = bob.transaction_keys()[1].keypair.public().clone();
    let disclosure_ok = w.verifier.disclosures().len() == 1
        && w.verifier.disclosures()[0].key == bob1
        && w.verifier.disclosures()[0].identity.is_none();
    let unlinked_ok =
        final_block.is_some_and(|b| b.proposer == "node-1" && b.transactions.iter().any(|t| t.sender_key == bob0));

    r.check(honest_ok, "honest nodes dropped exactly the non-member transactions")?;
    r.check(audit_ok, "audit of the dishonest block flags exactly the non-member transactions")?;
    r.check(accounts_hidden, "verifier transcript contains no account identities")?;
    r.check(keys_hidden, "issuer transcript contains no transaction keys")?;
    r.check(psk_ok, "every established session has matching keys on both sides")?;
    r.check(disclosure_ok, "disclosure names only the chosen key")?;
    r.check(unlinked_ok, "undisclosed key stays usable after disclosure")?;
    Ok(())
}
