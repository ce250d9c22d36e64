use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chain::{Block, BlockHash, Chain, ChainError};
use super::node::{ConsensusNode, DropRecord, MembershipOracle};
use super::transaction::{Transaction, TransactionPool, TxError};
use crate::group_math::SchnorrGroup;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("no nodes")]
    NoNodes,
    #[error("transaction pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Transaction(#[from] TxError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MineOutcome {
    pub proposer: String,
    pub block: Option<Block>,
    pub dropped: Vec<DropRecord>,
}

/// Single scheduler over the pool and every node's chain. Nodes propose in
/// turn; a proposed block is replicated to every node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Simulation {
    nodes: Vec<ConsensusNode>,
    pool: TransactionPool,
    drop_log: Vec<DropRecord>,
    next_proposer: usize,
}

impl Simulation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node_id: &str, dishonest: bool) -> Result<(), SimError> {
        if self.nodes.iter().any(|n| n.node_id == node_id) {
            return Err(SimError::DuplicateNode(node_id.to_owned()));
        }
        let mut node = ConsensusNode::new(node_id, dishonest);
        if let Some(first) = self.nodes.first() {
            node.chain = first.chain.clone();
        }
        self.nodes.push(node);
        Ok(())
    }

    pub fn nodes(&self) -> &[ConsensusNode] {
        &self.nodes
    }

    pub fn pool(&self) -> &TransactionPool {
        &self.pool
    }

    pub fn drop_log(&self) -> &[DropRecord] {
        &self.drop_log
    }

    /// The replicated chain (every node holds the same copy).
    pub fn chain(&self) -> &Chain {
        static EMPTY: Chain = Chain::new();
        self.nodes.first().map_or(&EMPTY, |n| &n.chain)
    }

    pub fn find_block(&self, hash: &BlockHash) -> Option<&Block> {
        self.chain().find(hash)
    }

    pub fn submit(&mut self, group: &SchnorrGroup, tx: Transaction) -> Result<bool, SimError> {
        Ok(self.pool.submit(group, tx)?)
    }

    /// Lets `node_id` process the whole pool at time `clock`.
    pub fn mine(&mut self, node_id: &str, db: &impl MembershipOracle, clock: u64) -> Result<MineOutcome, SimError> {
        let idx = self
            .nodes
            .iter()
            .position(|n| n.node_id == node_id)
            .ok_or_else(|| SimError::UnknownNode(node_id.to_owned()))?;
        if self.pool.is_empty() {
            return Err(SimError::EmptyPool);
        }
        let snapshot = self.pool.pending().to_vec();
        let outcome = self.nodes[idx].process(db, &snapshot, clock)?;
        let processed: BTreeSet<_> = snapshot.iter().map(|t| t.txid).collect();
        self.pool.remove(&processed);
        if let Some(block) = &outcome.block {
            for (i, node) in self.nodes.iter_mut().enumerate() {
                if i != idx {
                    node.chain.append(block.clone())?;
                }
            }
        }
        self.drop_log.extend(outcome.dropped.iter().cloned());
        self.next_proposer = (idx + 1) % self.nodes.len();
        Ok(MineOutcome { proposer: node_id.to_owned(), block: outcome.block, dropped: outcome.dropped })
    }

    /// Next node in round-robin order proposes.
    pub fn mine_next(&mut self, db: &impl MembershipOracle, clock: u64) -> Result<MineOutcome, SimError> {
        let id = self.nodes.get(self.next_proposer).ok_or(SimError::NoNodes)?.node_id.clone();
        self.mine(&id, db, clock)
    }
}
