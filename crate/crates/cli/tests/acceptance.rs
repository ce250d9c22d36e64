//! Acceptance suite. Runs every criterion, prints one line per criterion,
//! and exits nonzero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chainanchor::epid::{
    join_member, revoke_by_issuer, revoke_signature, setup_group, sign_membership,
    sign_membership_bypassing_revocation, uses_named_base, verify_membership, BaseMode, GroupIssuingPrivateKey,
    GroupPublicKey, MembershipSignature, NonRevocationFailure, NonRevocationProof, RevocationKind, RevocationList,
    SignError, UserMemberPrivateKey, VerifyError,
};
use chainanchor::group_math::{ParameterProfile, SubgroupElement};
use chainanchor::ledger::{chain_scan_membership, validator_audit, TxId, NOT_A_MEMBER};
use chainanchor::roles::{Message, SessionStatus};
use chainanchor_cli::{run_demo, run_demo_with, Command, WorldState, ISSUER_DOMAIN, VERIFIER_DOMAIN};
use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const BASENAME: &[u8] = b"idp-issuer.com/acceptance";
const MSG: &[u8] = b"acceptance message";
const NONCE: &[u8] = b"acceptance-nonce";

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn empty_lists() -> (RevocationList, RevocationList) {
    (RevocationList::new(RevocationKind::Signature), RevocationList::new(RevocationKind::Issuer))
}

fn group(seed: u64) -> (GroupPublicKey, GroupIssuingPrivateKey) {
    setup_group(&ParameterProfile::desk(), &mut ChaCha20Rng::seed_from_u64(seed)).expect("setup")
}

fn members(
    gpk: &GroupPublicKey,
    gipk: &GroupIssuingPrivateKey,
    n: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<UserMemberPrivateKey> {
    (0..n).map(|_| join_member(gpk, gipk, BASENAME, rng).expect("join")).collect()
}

fn sign(
    sk: &UserMemberPrivateKey,
    gpk: &GroupPublicKey,
    mode: &BaseMode,
    lists: &(RevocationList, RevocationList),
    rng: &mut ChaCha20Rng,
) -> MembershipSignature {
    sign_membership(sk, gpk, MSG, NONCE, mode, &lists.0, &lists.1, rng).expect("sign")
}

fn verify(
    gpk: &GroupPublicKey,
    sig: &MembershipSignature,
    lists: &(RevocationList, RevocationList),
) -> Result<(), VerifyError> {
    verify_membership(gpk, MSG, NONCE, sig, &lists.0, &lists.1)
}

/// `A^e R^f S^v mod N` straight from the definition.
fn cl_oracle(gpk: &GroupPublicKey, sk: &UserMemberPrivateKey) -> BigUint {
    let n = &gpk.modulus;
    let mut acc = BigUint::from(1u32);
    for (base, exp) in [(&sk.a, &sk.e), (&gpk.secret_base, &sk.f), (&gpk.randomizer_base, &sk.v)] {
        acc = acc * base.modpow(exp, n) % n;
    }
    acc
}

fn completeness() -> Outcome {
    let start = Instant::now();
    let lists = empty_lists();
    for trial in 0..100u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(10_000 + trial);
        let (gpk, gipk) = setup_group(&ParameterProfile::desk(), &mut rng).map_err(|e| e.to_string())?;
        let sk = join_member(&gpk, &gipk, BASENAME, &mut rng).map_err(|e| e.to_string())?;
        let sig = sign(&sk, &gpk, &BaseMode::Random, &lists, &mut rng);
        verify(&gpk, &sig, &lists).map_err(|e| format!("trial {trial}: {e}"))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    Ok(format!("100/100 trials verified in {:.2}s", took.as_secs_f64()))
}

fn cl_relation() -> Outcome {
    let mut checked = 0;
    for seed in 0..10u64 {
        let (gpk, gipk) = group(20_000 + seed);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for sk in members(&gpk, &gipk, 5, &mut rng) {
            ensure(cl_oracle(&gpk, &sk) == gpk.target, format!("group {seed}: relation fails"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} keys over 10 groups satisfy the relation"))
}

fn one_key_many() -> Outcome {
    let (gpk, gipk) = group(30_000);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let keys = members(&gpk, &gipk, 5, &mut rng);
    let lists = empty_lists();
    let sigs: Vec<_> = keys.iter().map(|k| sign(k, &gpk, &BaseMode::Random, &lists, &mut rng)).collect();
    for (i, s) in sigs.iter().enumerate() {
        verify(&gpk, s, &lists).map_err(|e| format!("signer {i}: {e}"))?;
    }
    let bases: BTreeSet<_> = sigs.iter().map(|s| s.base.clone()).collect();
    ensure(bases.len() == 5, "bases repeat")?;

    // The same five members onboarded through the verifier role: its stored
    // state must carry no credential value or account name.
    let mut world = WorldState::setup(ParameterProfile::desk(), 31, "g").map_err(|e| e.to_string())?;
    let names: Vec<String> = (0..5).map(|i| format!("member{i}")).collect();
    for u in &names {
        for cmd in [
            Command::Enroll { user: u.clone() },
            Command::Join { user: u.clone() },
            Command::Prove { user: u.clone(), member_key: 0 },
            Command::Register { user: u.clone(), key: Some(0) },
        ] {
            world.execute(&cmd).map_err(|e| format!("{u}: {e}"))?;
        }
    }
    let state = serde_json::to_string(&world.verifier).map_err(|e| e.to_string())?;
    for u in &names {
        let actor = &world.users[u].actor;
        ensure(!state.contains(actor.account()), format!("verifier state names {u}"))?;
        for sk in actor.member_keys() {
            for v in [&sk.a, &sk.e, &sk.f, &sk.v] {
                ensure(
                    !state.contains(&v.to_str_radix(16)),
                    format!("verifier state holds a credential value of {u}"),
                )?;
            }
        }
    }
    ensure(world.verifier.permissions_db().len() == 5, "expected five registered keys")?;
    Ok("5 signers verified under one group key; verifier state holds no signer credential".into())
}

fn unlinkability() -> Outcome {
    let (gpk, gipk) = group(40_000);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let keys = members(&gpk, &gipk, 2, &mut rng);
    let lists = empty_lists();
    let sigs: Vec<_> = (0..100).map(|_| sign(&keys[0], &gpk, &BaseMode::Random, &lists, &mut rng)).collect();
    let distinct =
        |f: &dyn Fn(&MembershipSignature) -> String| sigs.iter().map(f).collect::<BTreeSet<_>>().len() == sigs.len();
    ensure(distinct(&|s| s.base.value().to_string()), "B repeats")?;
    ensure(distinct(&|s| s.pseudonym.value().to_string()), "K repeats")?;
    ensure(distinct(&|s| s.blinded_credential.to_string()), "T repeats")?;
    ensure(distinct(&|s| s.challenge.to_string()), "c repeats")?;

    let named = BaseMode::Named(b"verifier.example/named".to_vec());
    let k0: BTreeSet<_> = (0..10)
        .map(|_| {
            let s = sign(&keys[0], &gpk, &named, &lists, &mut rng);
            assert!(uses_named_base(&gpk, &s, b"verifier.example/named"));
            verify(&gpk, &s, &lists).expect("named base verifies");
            s.pseudonym
        })
        .collect();
    let k1 = sign(&keys[1], &gpk, &named, &lists, &mut rng).pseudonym;
    ensure(k0.len() == 1, "named-base K varies for one key")?;
    ensure(!k0.contains(&k1), "named-base K collides across keys")?;
    Ok("50 pairs fully distinct; named base K constant over 10 and distinct across keys".into())
}

fn bump(x: &BigUint) -> BigUint {
    x + 1u32
}

fn bump_el(x: &SubgroupElement) -> SubgroupElement {
    SubgroupElement::from_value_unchecked(bump(x.value()))
}

fn proof_mut<'a>(s: &'a mut MembershipSignature, list: &str, i: usize) -> &'a mut NonRevocationProof {
    if list == "sig-rl" {
        &mut s.sig_rl_proofs[i]
    } else {
        &mut s.issuer_rl_proofs[i]
    }
}

/// Every single-field `+1` variant of `sig`, labelled.
fn perturbations(sig: &MembershipSignature) -> Vec<(String, MembershipSignature)> {
    let mut out = Vec::new();
    let mut push = |label: &str, f: &dyn Fn(&mut MembershipSignature)| {
        let mut s = sig.clone();
        f(&mut s);
        out.push((label.to_owned(), s));
    };
    push("B", &|s| s.base = bump_el(&s.base));
    push("K", &|s| s.pseudonym = bump_el(&s.pseudonym));
    push("T", &|s| s.blinded_credential = bump(&s.blinded_credential));
    push("c", &|s| s.challenge = bump(&s.challenge));
    push("s_e", &|s| s.s_e = bump(&s.s_e));
    push("s_f", &|s| s.s_f = bump(&s.s_f));
    push("s_v", &|s| s.s_v += BigInt::from(1));
    push("sig_rl_epoch", &|s| s.sig_rl_epoch += 1);
    push("issuer_rl_epoch", &|s| s.issuer_rl_epoch += 1);
    for (list, count) in [("sig-rl", sig.sig_rl_proofs.len()), ("issuer-rl", sig.issuer_rl_proofs.len())] {
        for i in 0..count {
            push(&format!("{list}[{i}].W"), &|s| {
                let p = proof_mut(s, list, i);
                p.w = bump_el(&p.w);
            });
            push(&format!("{list}[{i}].c"), &|s| {
                let p = proof_mut(s, list, i);
                p.challenge = bump(&p.challenge);
            });
            push(&format!("{list}[{i}].s_alpha"), &|s| {
                let p = proof_mut(s, list, i);
                p.s_alpha = bump(&p.s_alpha);
            });
            push(&format!("{list}[{i}].s_beta"), &|s| {
                let p = proof_mut(s, list, i);
                p.s_beta = bump(&p.s_beta);
            });
        }
    }
    out
}

fn soundness() -> Outcome {
    let (gpk, gipk) = group(50_000);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let keys = members(&gpk, &gipk, 4, &mut rng);
    let (mut sig_rl, mut issuer_rl) = empty_lists();
    for k in &keys[1..3] {
        let s = sign(k, &gpk, &BaseMode::Random, &(sig_rl.clone(), issuer_rl.clone()), &mut rng);
        sig_rl = revoke_signature(&sig_rl, s.base, s.pseudonym);
    }
    let s = sign(&keys[3], &gpk, &BaseMode::Named(BASENAME.to_vec()), &(sig_rl.clone(), issuer_rl.clone()), &mut rng);
    issuer_rl = revoke_by_issuer(&issuer_rl, s.base, s.pseudonym);
    let lists = (sig_rl, issuer_rl);

    let mut total = 0;
    for mode in [BaseMode::Random, BaseMode::Named(b"named".to_vec())] {
        let sig = sign(&keys[0], &gpk, &mode, &lists, &mut rng);
        verify(&gpk, &sig, &lists).map_err(|e| format!("baseline: {e}"))?;
        for (label, bad) in perturbations(&sig) {
            ensure(verify(&gpk, &bad, &lists).is_err(), format!("perturbed {label} still verifies"))?;
            total += 1;
        }
    }
    ensure(total == 2 * (9 + 4 * 3), format!("unexpected perturbation count {total}"))?;
    Ok(format!("{total}/{total} perturbations rejected"))
}

fn revocation() -> Outcome {
    let (gpk, gipk) = group(60_000);
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let keys = members(&gpk, &gipk, 10, &mut rng);
    let mut lists = empty_lists();

    let s3 = sign(&keys[3], &gpk, &BaseMode::Random, &lists, &mut rng);
    lists.0 = revoke_signature(&lists.0, s3.base, s3.pseudonym);
    let s7 = sign(&keys[7], &gpk, &BaseMode::Named(BASENAME.to_vec()), &lists, &mut rng);
    lists.1 = revoke_by_issuer(&lists.1, s7.base, s7.pseudonym);

    for (idx, kind) in [(3, RevocationKind::Signature), (7, RevocationKind::Issuer)] {
        let err = sign_membership(&keys[idx], &gpk, MSG, NONCE, &BaseMode::Random, &lists.0, &lists.1, &mut rng)
            .err()
            .ok_or(format!("member {idx} could still sign"))?;
        ensure(err == SignError::Revoked(kind) && err.to_string() == "revoked", format!("member {idx}: {err}"))?;
        let forged = sign_membership_bypassing_revocation(
            &keys[idx],
            &gpk,
            MSG,
            NONCE,
            &BaseMode::Random,
            &lists.0,
            &lists.1,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
        match verify(&gpk, &forged, &lists) {
            Err(VerifyError::NonRevocation { kind: k, reason: NonRevocationFailure::Revoked, .. }) if k == kind => {}
            other => return Err(format!("bypassed signature of member {idx}: {other:?}")),
        }
    }
    for (i, k) in keys.iter().enumerate().filter(|(i, _)| *i != 3 && *i != 7) {
        let s = sign(k, &gpk, &BaseMode::Random, &lists, &mut rng);
        verify(&gpk, &s, &lists).map_err(|e| format!("member {i}: {e}"))?;
    }
    Ok("revoked members refused on both lists; 8 others still verify".into())
}

/// Txids whose sender key the owning user never registered; computed from
/// the users' side, not from the verifier's database.
fn non_member_oracle(world: &WorldState, txids: &[(TxId, String, usize)]) -> BTreeSet<TxId> {
    txids
        .iter()
        .filter(|(_, user, key)| world.users[user].actor.transaction_keys()[*key].registered_session.is_none())
        .map(|(id, _, _)| *id)
        .collect()
}

fn simulate(seed: u64, dishonest: bool) -> Result<(), String> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut world = WorldState::setup(ParameterProfile::desk(), seed, "sim").map_err(|e| e.to_string())?;
    let run =
        |world: &mut WorldState, cmd: Command| world.execute(&cmd).map(|_| ()).map_err(|e| format!("{cmd:?}: {e}"));
    if dishonest {
        run(&mut world, Command::AddNode { node: "rogue".into(), dishonest: true })?;
    }
    let n_members = rng.gen_range(2..=4);
    let n_outsiders = rng.gen_range(1..=3);
    let mut senders = Vec::new();
    for i in 0..n_members {
        let u = format!("m{i}");
        for cmd in [
            Command::Enroll { user: u.clone() },
            Command::Join { user: u.clone() },
            Command::Prove { user: u.clone(), member_key: 0 },
            Command::Register { user: u.clone(), key: Some(0) },
        ] {
            run(&mut world, cmd)?;
        }
        senders.push((u.clone(), 0));
        if rng.gen_bool(0.5) {
            // A second key that is never registered.
            run(&mut world, Command::Keygen { user: u.clone() })?;
            senders.push((u, 1));
        }
    }
    for i in 0..n_outsiders {
        let u = format!("x{i}");
        run(&mut world, Command::AddUser { user: u.clone() })?;
        run(&mut world, Command::Keygen { user: u.clone() })?;
        senders.push((u, 0));
    }

    let nodes: Vec<String> = world.sim.nodes().iter().map(|n| n.node_id.clone()).collect();
    let mut submitted = Vec::new();
    for round in 0..rng.gen_range(2..=4) {
        for j in 0..rng.gen_range(3..=8) {
            let (user, key) = senders.choose(&mut rng).expect("senders").clone();
            run(&mut world, Command::Tx { user: user.clone(), key, payload: format!("r{round} t{j}") })?;
            let tx = world.sim.pool().pending().last().expect("submitted");
            submitted.push((tx.txid, user, key));
        }
        let node = nodes.choose(&mut rng).expect("nodes").clone();
        let height = world.sim.chain().height();
        let pending: Vec<TxId> = world.sim.pool().pending().iter().map(|t| t.txid).collect();
        run(&mut world, Command::Mine { node: node.clone() })?;
        if world.sim.nodes().iter().any(|n| n.node_id == node && n.dishonest) && world.sim.chain().height() > height {
            let block = world.sim.chain().blocks().last().expect("block");
            let flagged: BTreeSet<TxId> =
                validator_audit(&world.verifier, block).violations.iter().map(|v| v.txid).collect();
            let expected: BTreeSet<TxId> =
                non_member_oracle(&world, &submitted).into_iter().filter(|t| pending.contains(t)).collect();
            ensure(flagged == expected, format!("seed {seed}: audit mismatch"))?;
        }
    }

    let non_members = non_member_oracle(&world, &submitted);
    let honest_dropped: BTreeSet<TxId> = world.sim.drop_log().iter().map(|d| d.txid).collect();
    ensure(world.sim.drop_log().iter().all(|d| d.reason == NOT_A_MEMBER), "drop reason")?;
    ensure(honest_dropped.is_subset(&non_members), format!("seed {seed}: a member tx was dropped"))?;
    let on_chain: BTreeSet<TxId> =
        world.sim.chain().blocks().iter().flat_map(|b| &b.transactions).map(|t| t.txid).collect();
    if !dishonest {
        ensure(
            chain_scan_membership(world.sim.chain(), &world.verifier),
            format!("seed {seed}: chain holds a non-member tx"),
        )?;
        ensure(honest_dropped == non_members, format!("seed {seed}: drop log differs from oracle"))?;
    } else {
        ensure(
            non_members.iter().all(|t| honest_dropped.contains(t) || on_chain.contains(t)),
            "non-member tx vanished",
        )?;
    }
    ensure(world.sim.chain().verify().is_ok(), "chain linkage")?;
    Ok(())
}

fn access_control() -> Outcome {
    for seed in 0..20 {
        simulate(70_000 + seed, false)?;
    }
    for seed in 0..5 {
        simulate(71_000 + seed, true)?;
    }
    Ok("20 honest runs clean with exact drop logs; 5 dishonest runs audited exactly".into())
}

fn contains_bytes(hay: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

fn identity_separation() -> Outcome {
    let report = run_demo(ParameterProfile::desk(), 42).map_err(|(e, _)| e.to_string())?;
    let w = &report.world;
    let verifier_view = w.network.transcript_for(VERIFIER_DOMAIN);
    let issuer_view = w.network.transcript_for(ISSUER_DOMAIN);
    let mut checked = 0;
    for u in w.users.values() {
        ensure(
            !contains_bytes(verifier_view.as_bytes(), u.actor.account().as_bytes()),
            format!("{} seen by verifier", u.actor.account()),
        )?;
        for k in u.actor.transaction_keys() {
            let key = k.keypair.public();
            ensure(!contains_bytes(issuer_view.as_bytes(), key.to_hex().as_bytes()), "issuer saw a key (hex)")?;
            ensure(!contains_bytes(issuer_view.as_bytes(), &key.to_bytes()), "issuer saw a key (raw)")?;
            checked += 1;
        }
    }
    ensure(!verifier_view.is_empty() && !issuer_view.is_empty(), "empty transcripts")?;
    Ok(format!("{} identities and {checked} transaction keys kept apart", w.users.len()))
}

fn determinism() -> Outcome {
    let a = run_demo(ParameterProfile::desk(), 42).map_err(|(e, _)| e.to_string())?;
    let b = run_demo(ParameterProfile::desk(), 42).map_err(|(e, _)| e.to_string())?;
    let c = run_demo_with(ParameterProfile::desk(), 42, true).map_err(|(e, _)| e.to_string())?;
    ensure(a.lines.join("\n").as_bytes() == b.lines.join("\n").as_bytes(), "repeat run differs")?;
    ensure(a.lines == c.lines, "round-trip run differs")?;
    ensure(
        a.world.state_hash() == b.world.state_hash() && a.world.state_hash() == c.world.state_hash(),
        "state hash differs",
    )?;
    let reloaded = WorldState::from_json(&a.world.to_json()).map_err(|e| e.to_string())?;
    ensure(reloaded.state_hash() == a.world.state_hash(), "reload changes state")?;
    let replayed = a.world.replay().map_err(|e| e.to_string())?;
    ensure(replayed.transcript[..] == a.world.transcript[..replayed.transcript.len()], "replay transcript differs")?;
    ensure(replayed.sim == a.world.sim && replayed.verifier == a.world.verifier, "replay state differs")?;
    Ok(format!("{} transcript lines identical across runs and round trips", a.lines.len()))
}

fn last_session_id(world: &WorldState) -> Option<String> {
    world.network.log().iter().rev().filter(|e| e.step == "6.2").find_map(|e| match e.message()? {
        Message::Challenge { session_id, .. } => Some(session_id),
        _ => None,
    })
}

fn psk_agreement() -> Outcome {
    let report = run_demo(ParameterProfile::desk(), 42).map_err(|(e, _)| e.to_string())?;
    let mut sessions = 0;
    for u in report.world.users.values() {
        for sid in &u.sessions {
            let mine = u.actor.psk_sessions().get(sid).map(|s| s.psk);
            let theirs = report.world.verifier.session(sid).map(|s| s.psk.psk);
            ensure(mine.is_some() && mine == theirs, format!("session {sid} keys differ"))?;
            sessions += 1;
        }
    }

    for step in ["6.3", "6.4"] {
        let mut world = WorldState::setup(ParameterProfile::desk(), 90, "g").map_err(|e| e.to_string())?;
        for cmd in [Command::Enroll { user: "u".into() }, Command::Join { user: "u".into() }] {
            world.execute(&cmd).map_err(|e| e.to_string())?;
        }
        let group = world.gpk().subgroup.clone();
        world.network.set_tamper(move |env| {
            if env.step == step {
                env.edit_message(|m| {
                    if let Message::MembershipProof { share, .. } | Message::ProofAccepted { share, .. } = m {
                        *share = group.mul(share, &group.generator());
                    }
                });
            }
        });
        let err = world.execute(&Command::Prove { user: "u".into(), member_key: 0 });
        ensure(err.is_err(), format!("tampered share at {step} accepted"))?;
        let sid = last_session_id(&world).ok_or("no challenge issued")?;
        ensure(world.users["u"].actor.psk_sessions().is_empty(), format!("user kept a key after tamper at {step}"))?;
        let status = world.verifier.session(&sid).map(|s| s.status.clone());
        ensure(
            !matches!(status, Some(SessionStatus::Established)),
            format!("verifier established after tamper at {step}"),
        )?;
    }
    Ok(format!("{sessions} honest sessions agree; tampered shares rejected by both sides"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("EPID completeness", completeness),
        ("CL-relation oracle", cl_relation),
        ("one group key verifies many members", one_key_many),
        ("unlinkability", unlinkability),
        ("soundness sweep", soundness),
        ("revocation", revocation),
        ("access-control safety", access_control),
        ("identity separation", identity_separation),
        ("determinism", determinism),
        ("PSK agreement", psk_agreement),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
