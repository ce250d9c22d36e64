use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_math::encoding::hex_bytes;
use crate::group_math::{hash_bytes, SchnorrGroup, Transcript};
use crate::signature::{KeyPair, Signature, VerifyingKey};

pub type TxId = [u8; 32];

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum TxError {
    #[error("bad transaction signature")]
    BadSignature,
    #[error("txid does not match body")]
    TxidMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender_key: VerifyingKey,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    pub timestamp: u64,
    pub signature: Signature,
    #[serde(with = "hex_bytes")]
    pub txid: TxId,
}

fn signing_bytes(sender: &VerifyingKey, payload: &[u8], timestamp: u64) -> Vec<u8> {
    Transcript::new("chainanchor/transaction").bytes(sender.to_bytes()).bytes(payload).u64(timestamp).encode()
}

fn compute_txid(sender: &VerifyingKey, payload: &[u8], timestamp: u64, sig: &Signature) -> TxId {
    let mut body = signing_bytes(sender, payload, timestamp);
    body.extend(Transcript::new("chainanchor/txid").ints([&sig.challenge, &sig.response]).encode());
    hash_bytes(&body)
}

/// Step 8: a transaction signed with `K_trans⁻¹`.
pub fn create_transaction<R: Rng + ?Sized>(
    keypair: &KeyPair,
    group: &SchnorrGroup,
    payload: &[u8],
    timestamp: u64,
    rng: &mut R,
) -> Transaction {
    let sender_key = keypair.public().clone();
    let signature = keypair.sign(group, &signing_bytes(&sender_key, payload, timestamp), rng);
    let txid = compute_txid(&sender_key, payload, timestamp, &signature);
    Transaction { sender_key, payload: payload.to_vec(), timestamp, signature, txid }
}

impl Transaction {
    pub fn verify(&self, group: &SchnorrGroup) -> Result<(), TxError> {
        self.sender_key
            .verify(group, &signing_bytes(&self.sender_key, &self.payload, self.timestamp), &self.signature)
            .map_err(|_| TxError::BadSignature)?;
        if compute_txid(&self.sender_key, &self.payload, self.timestamp, &self.signature) != self.txid {
            return Err(TxError::TxidMismatch);
        }
        Ok(())
    }

    pub fn txid_hex(&self) -> String {
        hex::encode(self.txid)
    }
}

/// Unprocessed transactions in arrival order, unique by txid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionPool {
    pending: Vec<Transaction>,
}

impl TransactionPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Step 9 admission: signature check only. Returns false for a
    /// duplicate txid.
    pub fn submit(&mut self, group: &SchnorrGroup, tx: Transaction) -> Result<bool, TxError> {
        tx.verify(group)?;
        if self.pending.iter().any(|t| t.txid == tx.txid) {
            return Ok(false);
        }
        self.pending.push(tx);
        Ok(true)
    }

    pub fn pending(&self) -> &[Transaction] {
        &self.pending
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn remove(&mut self, txids: &BTreeSet<TxId>) {
        self.pending.retain(|t| !txids.contains(&t.txid));
    }
}
