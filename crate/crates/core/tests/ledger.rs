use std::collections::BTreeSet;
use std::sync::OnceLock;

use chainanchor::group_math::{gen_schnorr_group, ParameterProfile, SchnorrGroup};
use chainanchor::ledger::{
    chain_scan_membership, create_transaction, export_chain, export_drop_log, parse_chain, parse_drop_log,
    validator_audit, Simulation, TxId, NOT_A_MEMBER,
};
use chainanchor::signature::{KeyPair, VerifyingKey};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn group() -> &'static SchnorrGroup {
    static G: OnceLock<SchnorrGroup> = OnceLock::new();
    G.get_or_init(|| gen_schnorr_group(&ParameterProfile::desk(), &mut ChaCha20Rng::seed_from_u64(5)).unwrap())
}

/// Eight keys; the first `members` are in the database.
fn keys(rng: &mut ChaCha20Rng) -> Vec<KeyPair> {
    (0..8).map(|_| KeyPair::generate(group(), rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn honest_chains_hold_only_members(
        seed in any::<u64>(),
        members in 0usize..=8,
        rounds in proptest::collection::vec((proptest::collection::vec(0usize..8, 1..6), 0usize..3), 1..5),
        dishonest_node in any::<bool>(),
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kps = keys(&mut rng);
        let db: BTreeSet<VerifyingKey> = kps[..members].iter().map(|k| k.public().clone()).collect();
        let mut sim = Simulation::new();
        for n in 0..3 {
            sim.add_node(&format!("n{n}"), dishonest_node && n == 2).unwrap();
        }

        let mut outsiders: BTreeSet<TxId> = BTreeSet::new();
        for (r, (senders, node)) in rounds.iter().enumerate() {
            for (j, &s) in senders.iter().enumerate() {
                let tx = create_transaction(&kps[s], group(), format!("{r}/{j}").as_bytes(), r as u64, &mut rng);
                if s >= members {
                    outsiders.insert(tx.txid);
                }
                sim.submit(group(), tx).unwrap();
            }
            let out = sim.mine(&format!("n{node}"), &db, r as u64).unwrap();
            if let Some(b) = &out.block {
                let flagged: BTreeSet<TxId> = validator_audit(&db, b).violations.iter().map(|v| v.txid).collect();
                let expected: BTreeSet<TxId> = b.transactions.iter().filter(|t| outsiders.contains(&t.txid)).map(|t| t.txid).collect();
                prop_assert_eq!(flagged, expected);
            }
        }

        let dropped: BTreeSet<TxId> = sim.drop_log().iter().map(|d| d.txid).collect();
        prop_assert!(sim.drop_log().iter().all(|d| d.reason == NOT_A_MEMBER));
        prop_assert!(dropped.is_subset(&outsiders));
        let used_dishonest = sim.chain().blocks().iter().any(|b| b.proposer == "n2" && dishonest_node);
        if !used_dishonest {
            prop_assert!(chain_scan_membership(sim.chain(), &db));
            prop_assert_eq!(&dropped, &outsiders);
        }
        for n in sim.nodes() {
            prop_assert_eq!(&n.chain, sim.chain());
        }

        let text = export_chain(sim.chain());
        prop_assert_eq!(&parse_chain(&text).unwrap(), sim.chain());
        let rows = parse_drop_log(&export_drop_log(sim.drop_log())).unwrap();
        prop_assert_eq!(rows.len(), sim.drop_log().len());
    }
}

#[test]
fn mining_an_empty_pool_or_unknown_node_fails() {
    let mut sim = Simulation::new();
    let db: BTreeSet<VerifyingKey> = BTreeSet::new();
    sim.add_node("a", false).unwrap();
    assert!(sim.add_node("a", true).is_err());
    assert!(sim.mine("a", &db, 0).is_err());
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let kp = KeyPair::generate(group(), &mut rng);
    sim.submit(group(), create_transaction(&kp, group(), b"x", 0, &mut rng)).unwrap();
    assert!(sim.mine("b", &db, 0).is_err());
    let out = sim.mine_next(&db, 0).unwrap();
    assert!(out.block.is_none());
    assert_eq!(out.dropped.len(), 1);
}
