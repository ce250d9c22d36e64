//! Deterministic permissioned-ledger simulation: signed transactions, a
//! pool, consensus nodes that admit only registered transaction keys, and
//! validator audits.

pub mod chain;
pub mod export;
pub mod node;
pub mod simulation;
pub mod transaction;

pub use chain::{Block, BlockHash, Chain, ChainError};
pub use export::{export_chain, export_drop_log, parse_chain, parse_drop_log, ParseError};
pub use node::{
    chain_scan_membership, validator_audit, ConsensusNode, DropRecord, MembershipOracle, ProcessOutcome,
    ValidatorReport, Violation, NOT_A_MEMBER,
};
pub use simulation::{MineOutcome, SimError, Simulation};
pub use transaction::{create_transaction, Transaction, TransactionPool, TxError, TxId};
