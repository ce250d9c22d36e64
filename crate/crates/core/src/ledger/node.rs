use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::chain::{Block, BlockHash, Chain, ChainError};
use super::transaction::{Transaction, TxId};
use crate::group_math::encoding::hex_bytes;
use crate::roles::{PermissionsDatabase, VerifierActor};
use crate::signature::VerifyingKey;

pub const NOT_A_MEMBER: &str = "not-a-member";

/// Read-only view of the permissions database.
pub trait MembershipOracle {
    fn is_member(&self, key: &VerifyingKey) -> bool;
}

impl MembershipOracle for PermissionsDatabase {
    fn is_member(&self, key: &VerifyingKey) -> bool {
        self.contains(key)
    }
}

impl MembershipOracle for VerifierActor {
    fn is_member(&self, key: &VerifyingKey) -> bool {
        self.lookup(key)
    }
}

impl MembershipOracle for BTreeSet<VerifyingKey> {
    fn is_member(&self, key: &VerifyingKey) -> bool {
        self.contains(key)
    }
}

impl<T: MembershipOracle + ?Sized> MembershipOracle for &T {
    fn is_member(&self, key: &VerifyingKey) -> bool {
        (**self).is_member(key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    #[serde(with = "hex_bytes")]
    pub txid: TxId,
    pub reason: String,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(with = "hex_bytes")]
    pub txid: TxId,
    pub sender_key: VerifyingKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatorReport {
    #[serde(with = "hex_bytes")]
    pub block_hash: BlockHash,
    pub violations: Vec<Violation>,
}

impl ValidatorReport {
    pub fn is_compliant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Result of one `process` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessOutcome {
    pub block: Option<Block>,
    pub dropped: Vec<DropRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusNode {
    pub node_id: String,
    /// Includes every transaction without checking membership. Test fixture.
    pub dishonest: bool,
    pub chain: Chain,
}

impl ConsensusNode {
    pub fn new(node_id: &str, dishonest: bool) -> Self {
        Self { node_id: node_id.to_owned(), dishonest, chain: Chain::new() }
    }

    /// Step 10: only the sender key is consulted.
    pub fn check_membership(&self, db: &impl MembershipOracle, tx: &Transaction) -> bool {
        db.is_member(&tx.sender_key)
    }

    /// Steps 11-12 over a pool snapshot. Honest nodes drop non-members with
    /// a reason; a dishonest node includes everything. A resulting block
    /// is appended to this node's chain.
    pub fn process(
        &mut self,
        db: &impl MembershipOracle,
        pool: &[Transaction],
        clock: u64,
    ) -> Result<ProcessOutcome, ChainError> {
        let mut included = Vec::new();
        let mut dropped = Vec::new();
        for tx in pool {
            if self.dishonest || self.check_membership(db, tx) {
                included.push(tx.clone());
            } else {
                dropped.push(DropRecord { txid: tx.txid, reason: NOT_A_MEMBER.to_owned(), node: self.node_id.clone() });
            }
        }
        let block = if included.is_empty() {
            None
        } else {
            let block = Block::new(self.chain.height() + 1, self.chain.tip_hash(), clock, &self.node_id, included);
            self.chain.append(block.clone())?;
            Some(block)
        };
        Ok(ProcessOutcome { block, dropped })
    }
}

/// Re-checks every transaction of `block` against the database.
pub fn validator_audit(db: &impl MembershipOracle, block: &Block) -> ValidatorReport {
    let violations = block
        .transactions
        .iter()
        .filter(|tx| !db.is_member(&tx.sender_key))
        .map(|tx| Violation { txid: tx.txid, sender_key: tx.sender_key.clone() })
        .collect();
    ValidatorReport { block_hash: block.block_hash, violations }
}

/// True iff every transaction in every block has a registered sender.
pub fn chain_scan_membership(chain: &Chain, db: &impl MembershipOracle) -> bool {
    chain.blocks().iter().flat_map(|b| &b.transactions).all(|tx| db.is_member(&tx.sender_key))
}
