//! Full re-verification of a ledger dump.

use std::collections::HashSet;
use std::fmt;

use super::dump::LedgerDump;
use super::{merkle_root, BlockMetadata, Transaction};
use crate::crypto;
use crate::types::{Digest, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub segment: NodeId,
    /// Position in the chain, `None` for segment-level findings.
    pub block_index: Option<usize>,
    pub block_id: Option<String>,
    pub code: &'static str,
    pub detail: String,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "segment {}", self.segment)?;
        if let Some(i) = self.block_index {
            write!(f, " block {i}")?;
        }
        if let Some(id) = &self.block_id {
            write!(f, " ({id})")?;
        }
        write!(f, ": [{}] {}", self.code, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub segments: usize,
    pub blocks: usize,
    pub transactions: usize,
    pub signatures_checked: usize,
    pub failures: Vec<AuditFailure>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check linkage, timestamps, Merkle roots, block ids, recorded sizes,
/// stored utilities, every signature and transaction uniqueness across all
/// segments.
pub fn audit(dump: &LedgerDump) -> AuditReport {
    let h = &dump.header;
    let mut report = AuditReport { segments: dump.segments.len(), ..Default::default() };
    let mut global: HashSet<Digest> = HashSet::new();
    let expected_genesis = BlockMetadata::genesis(h.seed);

    for seg in &dump.segments {
        let mut fail = |index: Option<usize>, id: Option<String>, code: &'static str, detail: String| {
            report.failures.push(AuditFailure { segment: seg.owner, block_index: index, block_id: id, code, detail });
        };
        if seg.genesis != expected_genesis {
            fail(None, None, "genesis", "genesis does not match the dump seed".into());
        }
        let mut tip = seg.genesis;
        let mut stats = (0usize, 0usize, 0usize);
        for (i, entry) in seg.blocks.iter().enumerate() {
            let block = match entry {
                Ok(b) => b,
                Err(e) => {
                    fail(Some(i), None, "parse", e.clone());
                    continue;
                }
            };
            stats.0 += 1;
            let id = Some(block.metadata.block_id.short());
            let m = &block.metadata;
            if block.transactions.is_empty() {
                fail(Some(i), id.clone(), "empty-block", "block has no transactions".into());
            }
            if m.hash_prev != tip.block_id {
                fail(Some(i), id.clone(), "linkage", format!("parent {} != {}", m.hash_prev.short(), tip.block_id.short()));
            }
            if m.timestamp <= tip.timestamp {
                fail(Some(i), id.clone(), "timestamp", format!("{} after {}", m.timestamp, tip.timestamp));
            }
            if block.compressed_size > h.max_block_bytes {
                fail(Some(i), id.clone(), "size", format!("{} bytes exceeds {}", block.compressed_size, h.max_block_bytes));
            }
            let ids: Vec<Digest> = block.transactions.iter().map(Transaction::compute_id).collect();
            match merkle_root(&ids) {
                Ok(root) if root == m.merkle_root => {}
                Ok(_) => fail(Some(i), id.clone(), "merkle", "merkle root mismatch".into()),
                Err(_) => {}
            }
            if let Err(e) = block.check_commitments(h.codec) {
                if e.code() != "merkle" {
                    fail(Some(i), id.clone(), e.code(), e.to_string());
                }
            }
            let s = &block.score;
            if s.valid_count as usize != block.transactions.len() {
                fail(Some(i), id.clone(), "score", format!("η = {} for {} transactions", s.valid_count, block.transactions.len()));
            }
            let recomputed = h.utility.utility(s.valid_count, s.freshness, s.energy_cost);
            if recomputed.to_bits() != s.utility.to_bits() {
                fail(Some(i), id.clone(), "utility", format!("stored {} recomputed {}", s.utility, recomputed));
            }
            for tx in &block.transactions {
                stats.1 += 1;
                match dump.registry.get(&tx.sender) {
                    None => fail(Some(i), id.clone(), "unknown-sender", format!("sender {}", tx.sender)),
                    Some(pk) => {
                        stats.2 += 1;
                        if !crypto::verify(&tx.id, &tx.signature, pk) {
                            fail(Some(i), id.clone(), "signature", format!("transaction {} from {}", tx.id.short(), tx.sender));
                        }
                    }
                }
                if !global.insert(tx.id) {
                    fail(Some(i), id.clone(), "duplicate-tx", format!("transaction {}", tx.id.short()));
                }
            }
            tip = block.metadata;
        }
        report.blocks += stats.0;
        report.transactions += stats.1;
        report.signatures_checked += stats.2;
    }
    report
}
