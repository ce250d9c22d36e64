//! Signature-based and issuer revocation lists of `(B, K)` pairs.

use serde::{Deserialize, Serialize};

use crate::group_math::SubgroupElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevocationKind {
    /// Maintained by the verifier (`sig-RL`).
    Signature,
    /// Maintained by the issuer (`Issuer-RL`).
    Issuer,
}

impl RevocationKind {
    pub fn tag(self) -> &'static str {
        match self {
            RevocationKind::Signature => "sig-rl",
            RevocationKind::Issuer => "issuer-rl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationEntry {
    pub base: SubgroupElement,
    pub pseudonym: SubgroupElement,
}

/// Copy-on-write list: mutation returns a new list with a bumped epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationList {
    kind: RevocationKind,
    epoch: u64,
    entries: Vec<RevocationEntry>,
}

impl RevocationList {
    pub fn new(kind: RevocationKind) -> Self {
        Self { kind, epoch: 0, entries: Vec::new() }
    }

    pub fn kind(&self) -> RevocationKind {
        self.kind
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn entries(&self) -> &[RevocationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, base: &SubgroupElement, pseudonym: &SubgroupElement) -> bool {
        self.entries.iter().any(|e| e.base == *base && e.pseudonym == *pseudonym)
    }

    /// Appends `(base, pseudonym)`. Duplicates are a no-op and leave the
    /// epoch unchanged.
    pub fn with_entry(&self, base: SubgroupElement, pseudonym: SubgroupElement) -> Self {
        let mut next = self.clone();
        if !self.contains(&base, &pseudonym) {
            next.entries.push(RevocationEntry { base, pseudonym });
            next.epoch += 1;
        }
        next
    }
}

pub fn revoke_signature(sig_rl: &RevocationList, base: SubgroupElement, pseudonym: SubgroupElement) -> RevocationList {
    assert_eq!(sig_rl.kind(), RevocationKind::Signature, "not a signature revocation list");
    sig_rl.with_entry(base, pseudonym)
}

pub fn revoke_by_issuer(
    issuer_rl: &RevocationList,
    base: SubgroupElement,
    pseudonym: SubgroupElement,
) -> RevocationList {
    assert_eq!(issuer_rl.kind(), RevocationKind::Issuer, "not an issuer revocation list");
    issuer_rl.with_entry(base, pseudonym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn el(v: u32) -> SubgroupElement {
        SubgroupElement::from_value_unchecked(BigUint::from(v))
    }

    #[test]
    fn append_bumps_epoch_and_duplicates_are_noops() {
        let rl = RevocationList::new(RevocationKind::Signature);
        let one = revoke_signature(&rl, el(2), el(3));
        assert_eq!((one.epoch(), one.len()), (1, 1));
        assert_eq!((rl.epoch(), rl.len()), (0, 0), "original list untouched");

        let dup = revoke_signature(&one, el(2), el(3));
        assert_eq!(dup, one);

        let two = revoke_signature(&one, el(2), el(4));
        assert_eq!((two.epoch(), two.len()), (2, 2));
    }

    #[test]
    fn issuer_list_epochs_strictly_increase() {
        let mut rl = RevocationList::new(RevocationKind::Issuer);
        let mut last = rl.epoch();
        for v in 2..8 {
            rl = revoke_by_issuer(&rl, el(v), el(v + 100));
            assert!(rl.epoch() > last);
            last = rl.epoch();
        }
    }

    #[test]
    #[should_panic(expected = "not an issuer revocation list")]
    fn kinds_are_not_interchangeable() {
        revoke_by_issuer(&RevocationList::new(RevocationKind::Signature), el(2), el(3));
    }
}
