//! Line-oriented text forms of a chain and of the drop log.
//!
//! ```text
//! block <height> <block-hash>
//! prev <hash>
//! timestamp <t>
//! proposer <node-id>
//! tx <txid> <sender> <timestamp> <payload|-> <challenge> <response>
//! end
//! ```
//!
//! Drop-log rows are `<txid> <reason>`.

use thiserror::Error;

use super::chain::{Block, Chain, ChainError};
use super::node::DropRecord;
use super::transaction::{Transaction, TxId};
use crate::group_math::encoding::{from_hex, to_hex};
use crate::signature::{Signature, VerifyingKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("unterminated block")]
    Unterminated,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

pub fn export_chain(chain: &Chain) -> String {
    let mut out = String::new();
    for b in chain.blocks() {
        out.push_str(&format!("block {} {}\n", b.height, b.hash_hex()));
        out.push_str(&format!("prev {}\n", hex::encode(b.prev_hash)));
        out.push_str(&format!("timestamp {}\n", b.timestamp));
        out.push_str(&format!("proposer {}\n", b.proposer));
        for tx in &b.transactions {
            let payload = if tx.payload.is_empty() { "-".to_owned() } else { hex::encode(&tx.payload) };
            out.push_str(&format!(
                "tx {} {} {} {} {} {}\n",
                tx.txid_hex(),
                tx.sender_key.to_hex(),
                tx.timestamp,
                payload,
                to_hex(&tx.signature.challenge),
                to_hex(&tx.signature.response)
            ));
        }
        out.push_str("end\n");
    }
    out
}

fn hash32(s: &str) -> Option<[u8; 32]> {
    hex::decode(s).ok()?.try_into().ok()
}

struct Partial {
    height: u64,
    hash: [u8; 32],
    prev: Option<[u8; 32]>,
    timestamp: Option<u64>,
    proposer: Option<String>,
    txs: Vec<Transaction>,
}

/// Parses [`export_chain`] output and re-checks hashes and linkage.
pub fn parse_chain(text: &str) -> Result<Chain, ParseError> {
    let mut chain = Chain::new();
    let mut current: Option<Partial> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let err = |m: &str| ParseError::Line(n, m.to_owned());
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (fields.as_slice(), current.as_mut()) {
            ([], _) => {}
            (["block", h, hash], None) => {
                current = Some(Partial {
                    height: h.parse().map_err(|_| err("height"))?,
                    hash: hash32(hash).ok_or_else(|| err("block hash"))?,
                    prev: None,
                    timestamp: None,
                    proposer: None,
                    txs: Vec::new(),
                });
            }
            (["prev", h], Some(p)) => p.prev = Some(hash32(h).ok_or_else(|| err("prev"))?),
            (["timestamp", t], Some(p)) => p.timestamp = Some(t.parse().map_err(|_| err("timestamp"))?),
            (["proposer", id], Some(p)) => p.proposer = Some((*id).to_owned()),
            (["tx", txid, sender, ts, payload, c, s], Some(p)) => {
                let payload =
                    if *payload == "-" { Vec::new() } else { hex::decode(payload).map_err(|_| err("payload"))? };
                p.txs.push(Transaction {
                    txid: hash32(txid).ok_or_else(|| err("txid"))?,
                    sender_key: VerifyingKey::from_hex(sender).ok_or_else(|| err("sender"))?,
                    timestamp: ts.parse().map_err(|_| err("tx timestamp"))?,
                    payload,
                    signature: Signature {
                        challenge: from_hex(c).ok_or_else(|| err("challenge"))?,
                        response: from_hex(s).ok_or_else(|| err("response"))?,
                    },
                });
            }
            (["end"], Some(_)) => {
                let p = current.take().expect("matched Some");
                let block = Block {
                    height: p.height,
                    prev_hash: p.prev.ok_or_else(|| err("missing prev"))?,
                    timestamp: p.timestamp.ok_or_else(|| err("missing timestamp"))?,
                    proposer: p.proposer.ok_or_else(|| err("missing proposer"))?,
                    transactions: p.txs,
                    block_hash: p.hash,
                };
                chain.append(block)?;
            }
            _ => return Err(err("unexpected line")),
        }
    }
    if current.is_some() {
        return Err(ParseError::Unterminated);
    }
    Ok(chain)
}

pub fn export_drop_log(drops: &[DropRecord]) -> String {
    drops.iter().map(|d| format!("{} {}\n", hex::encode(d.txid), d.reason)).collect()
}

pub fn parse_drop_log(text: &str) -> Result<Vec<(TxId, String)>, ParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let (id, reason) = l.split_once(' ').ok_or_else(|| ParseError::Line(i + 1, "row".into()))?;
            let id = hash32(id).ok_or_else(|| ParseError::Line(i + 1, "txid".into()))?;
            Ok((id, reason.to_owned()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_math::{gen_schnorr_group, ParameterProfile};
    use crate::ledger::transaction::create_transaction;
    use crate::signature::KeyPair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn chain_text_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let group = gen_schnorr_group(&ParameterProfile::desk(), &mut rng).unwrap();
        let kp = KeyPair::generate(&group, &mut rng);
        let mut chain = Chain::new();
        for h in 1..=3u64 {
            let txs = (0..h)
                .map(|i| create_transaction(&kp, &group, if i == 0 { b"" } else { b"pay" }, h * 10 + i, &mut rng))
                .collect();
            chain.append(Block::new(h, chain.tip_hash(), h, "node-0", txs)).unwrap();
        }
        let text = export_chain(&chain);
        let back = parse_chain(&text).unwrap();
        assert_eq!(back, chain);
        for tx in back.blocks().iter().flat_map(|b| &b.transactions) {
            tx.verify(&group).unwrap();
        }

        let broken = text.replacen("proposer node-0", "proposer node-9", 1);
        assert_eq!(parse_chain(&broken), Err(ParseError::Chain(ChainError::Hash)));
        assert_eq!(parse_chain("block 1 00"), Err(ParseError::Line(1, "block hash".into())));
    }

    #[test]
    fn drop_log_rows() {
        let drops = vec![DropRecord { txid: [3; 32], reason: "not-a-member".into(), node: "n".into() }];
        let text = export_drop_log(&drops);
        assert_eq!(parse_drop_log(&text).unwrap(), vec![([3; 32], "not-a-member".to_owned())]);
    }
}
