use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::transaction::Transaction;
use crate::group_math::encoding::hex_bytes;
use crate::group_math::Transcript;

pub type BlockHash = [u8; 32];

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ChainError {
    #[error("height {found} does not follow {expected_parent}")]
    Height { expected_parent: u64, found: u64 },
    #[error("prev_hash does not match parent")]
    PrevHash,
    #[error("block hash does not recompute")]
    Hash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    #[serde(with = "hex_bytes")]
    pub prev_hash: BlockHash,
    pub timestamp: u64,
    pub proposer: String,
    pub transactions: Vec<Transaction>,
    #[serde(with = "hex_bytes")]
    pub block_hash: BlockHash,
}

impl Block {
    pub fn new(
        height: u64,
        prev_hash: BlockHash,
        timestamp: u64,
        proposer: &str,
        transactions: Vec<Transaction>,
    ) -> Self {
        let mut block =
            Block { height, prev_hash, timestamp, proposer: proposer.to_owned(), transactions, block_hash: [0; 32] };
        block.block_hash = block.compute_hash();
        block
    }

    /// Hash over the header and every transaction's txid.
    pub fn compute_hash(&self) -> BlockHash {
        let mut t = Transcript::new("chainanchor/block")
            .u64(self.height)
            .bytes(self.prev_hash)
            .u64(self.timestamp)
            .bytes(&self.proposer)
            .u64(self.transactions.len() as u64);
        for tx in &self.transactions {
            t = t.bytes(tx.txid);
        }
        t.digest()
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.block_hash)
    }
}

/// Blocks linked by `prev_hash`, starting at height 1 on a zero parent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    pub const fn new() -> Self {
        Self { blocks: Vec::new() }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn height(&self) -> u64 {
        self.blocks.last().map_or(0, |b| b.height)
    }

    pub fn tip_hash(&self) -> BlockHash {
        self.blocks.last().map_or([0; 32], |b| b.block_hash)
    }

    pub fn find(&self, hash: &BlockHash) -> Option<&Block> {
        self.blocks.iter().find(|b| b.block_hash == *hash)
    }

    fn check_link(&self, block: &Block) -> Result<(), ChainError> {
        if block.height != self.height() + 1 {
            return Err(ChainError::Height { expected_parent: self.height(), found: block.height });
        }
        if block.prev_hash != self.tip_hash() {
            return Err(ChainError::PrevHash);
        }
        if block.compute_hash() != block.block_hash {
            return Err(ChainError::Hash);
        }
        Ok(())
    }

    pub fn append(&mut self, block: Block) -> Result<(), ChainError> {
        self.check_link(&block)?;
        self.blocks.push(block);
        Ok(())
    }

    /// Re-checks every link from the start.
    pub fn verify(&self) -> Result<(), ChainError> {
        let mut replay = Chain::new();
        for b in &self.blocks {
            replay.append(b.clone())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linkage_is_enforced() {
        let mut chain = Chain::new();
        let b1 = Block::new(1, [0; 32], 1, "n0", vec![]);
        chain.append(b1.clone()).unwrap();
        assert_eq!(
            chain.append(Block::new(3, b1.block_hash, 2, "n0", vec![])),
            Err(ChainError::Height { expected_parent: 1, found: 3 })
        );
        assert_eq!(chain.append(Block::new(2, [1; 32], 2, "n0", vec![])), Err(ChainError::PrevHash));
        let mut forged = Block::new(2, b1.block_hash, 2, "n0", vec![]);
        forged.proposer = "n1".into();
        assert_eq!(chain.append(forged), Err(ChainError::Hash));
        chain.append(Block::new(2, b1.block_hash, 2, "n1", vec![])).unwrap();
        chain.verify().unwrap();
        assert_eq!(chain.height(), 2);
    }
}
