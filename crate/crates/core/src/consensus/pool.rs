use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::crypto::PublicKey;
use crate::ledger::Transaction;
use crate::types::{Digest, NodeId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    BadSignature,
    UnknownSender,
    Duplicate,
    Oversize,
}

impl RejectReason {
    pub const ALL: [RejectReason; 4] =
        [RejectReason::BadSignature, RejectReason::UnknownSender, RejectReason::Duplicate, RejectReason::Oversize];

    pub fn name(self) -> &'static str {
        match self {
            RejectReason::BadSignature => "bad-signature",
            RejectReason::UnknownSender => "unknown-sender",
            RejectReason::Duplicate => "duplicate",
            RejectReason::Oversize => "oversize",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmitOutcome {
    /// `timely` is ℓ_k < τ_max for the receiving edge.
    Accepted { timely: bool },
    Rejected(RejectReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledTx {
    pub tx: Transaction,
    pub received_at: Timestamp,
    pub timely: bool,
    /// Caller-supplied handle, used by the engine to track submissions.
    pub tag: u64,
}

/// V_j: transactions verified by one edge node and not yet committed.
#[derive(Debug, Clone)]
pub struct ValidationPool {
    pub owner: NodeId,
    pub max_payload_bytes: usize,
    pub tau_max_s: f64,
    admitted: BTreeMap<Digest, PooledTx>,
    committed: HashSet<Digest>,
    pub rejected: BTreeMap<RejectReason, u64>,
}

impl ValidationPool {
    pub fn new(owner: NodeId, max_payload_bytes: usize, tau_max_s: f64) -> Self {
        ValidationPool {
            owner,
            max_payload_bytes,
            tau_max_s,
            admitted: BTreeMap::new(),
            committed: HashSet::new(),
            rejected: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.admitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.admitted.is_empty()
    }

    pub fn contains(&self, id: &Digest) -> bool {
        self.admitted.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PooledTx> {
        self.admitted.values()
    }

    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    /// Verify and insert. Late transactions are accepted and flagged.
    pub fn admit(
        &mut self,
        tx: Transaction,
        registry: &BTreeMap<NodeId, PublicKey>,
        now: Timestamp,
        tag: u64,
    ) -> AdmitOutcome {
        let reason = if tx.payload.len() > self.max_payload_bytes {
            Some(RejectReason::Oversize)
        } else {
            match registry.get(&tx.sender) {
                None => Some(RejectReason::UnknownSender),
                Some(pk) if !tx.verify(pk) => Some(RejectReason::BadSignature),
                Some(_) if self.committed.contains(&tx.id) || self.admitted.contains_key(&tx.id) => {
                    Some(RejectReason::Duplicate)
                }
                Some(_) => None,
            }
        };
        if let Some(r) = reason {
            *self.rejected.entry(r).or_insert(0) += 1;
            return AdmitOutcome::Rejected(r);
        }
        let latency = now.as_secs() - tx.submit_time.as_secs();
        let timely = latency < self.tau_max_s;
        self.admitted.insert(tx.id, PooledTx { tx, received_at: now, timely, tag });
        AdmitOutcome::Accepted { timely }
    }

    /// Move an already verified entry in (batch transfer between edges).
    pub fn insert_verified(&mut self, entry: PooledTx) -> bool {
        if self.committed.contains(&entry.tx.id) || self.admitted.contains_key(&entry.tx.id) {
            return false;
        }
        self.admitted.insert(entry.tx.id, entry);
        true
    }

    pub fn drain(&mut self) -> Vec<PooledTx> {
        std::mem::take(&mut self.admitted).into_values().collect()
    }

    /// Forget ids that were committed anywhere; returns the removed entries.
    pub fn mark_committed(&mut self, ids: &[Digest]) -> Vec<PooledTx> {
        let mut out = Vec::new();
        for id in ids {
            self.committed.insert(*id);
            if let Some(e) = self.admitted.remove(id) {
                out.push(e);
            }
        }
        out
    }

    /// Remove entries submitted before `cutoff`.
    pub fn expire(&mut self, cutoff: Timestamp) -> Vec<PooledTx> {
        let old: Vec<Digest> =
            self.admitted.iter().filter(|(_, e)| e.tx.submit_time < cutoff).map(|(k, _)| *k).collect();
        old.into_iter().filter_map(|k| self.admitted.remove(&k)).collect()
    }
}

/// Admit into `pool` with a zero tag.
pub fn admit_transaction(
    pool: &mut ValidationPool,
    tx: Transaction,
    registry: &BTreeMap<NodeId, PublicKey>,
    now: Timestamp,
) -> AdmitOutcome {
    pool.admit(tx, registry, now, 0)
}
