//! The verifier-held list of approved transaction keys.

use serde::{Deserialize, Serialize};

use crate::signature::VerifyingKey;

/// One row: a key and when it was registered. Nothing else, by design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionEntry {
    pub key: VerifyingKey,
    pub registered_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionsDatabase {
    group_id: String,
    entries: Vec<PermissionEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("duplicate key")]
pub struct DuplicateKey;

impl PermissionsDatabase {
    pub fn new(group_id: &str) -> Self {
        Self { group_id: group_id.to_owned(), entries: Vec::new() }
    }

    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    pub fn entries(&self) -> &[PermissionEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &VerifyingKey) -> bool {
        self.entries.iter().any(|e| e.key == *key)
    }

    pub fn append(&mut self, key: VerifyingKey, registered_at: u64) -> Result<(), DuplicateKey> {
        if self.contains(&key) {
            return Err(DuplicateKey);
        }
        self.entries.push(PermissionEntry { key, registered_at });
        Ok(())
    }
}
