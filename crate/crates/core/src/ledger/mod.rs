//! Transaction and block data model, Merkle commitments, block compression
//! and per-edge ledger segments.

pub mod audit;
pub mod codec;
pub mod dump;
pub mod merkle;
pub mod wire;

use std::collections::HashSet;

use thiserror::Error;

use crate::crypto::{self, hash, hash_parts, PrivateKey, PublicKey, SchemeId, Signature};
use crate::types::{Digest, NodeId, Timestamp};

pub use codec::{compress_bytes, compression_ratio, Codec, CompressionOutcome};
pub use merkle::merkle_root;
use wire::Writer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("block has no transactions")]
    EmptyBlock,
    #[error("linkage mismatch: block points to {found}, segment tip is {expected}")]
    Linkage { expected: String, found: String },
    #[error("duplicate transaction {0}")]
    DuplicateTransaction(String),
    #[error("block size violation: {0}")]
    SizeViolation(String),
    #[error("merkle root mismatch")]
    MerkleMismatch,
    #[error("block id mismatch")]
    BlockIdMismatch,
    #[error("timestamp {found} does not follow parent {parent}")]
    NonMonotonicTimestamp { parent: Timestamp, found: Timestamp },
    #[error("raw size must be positive")]
    ZeroRawSize,
    #[error("compressed size {compressed} outside (0, {raw}]")]
    CompressedExceedsRaw { raw: u64, compressed: u64 },
    #[error("codec: {0}")]
    Codec(String),
}

impl LedgerError {
    /// Stable short code, used in audit reports and metrics.
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::EmptyBlock => "empty-block",
            LedgerError::Linkage { .. } => "linkage",
            LedgerError::DuplicateTransaction(_) => "duplicate-tx",
            LedgerError::SizeViolation(_) => "size",
            LedgerError::MerkleMismatch => "merkle",
            LedgerError::BlockIdMismatch => "block-id",
            LedgerError::NonMonotonicTimestamp { .. } => "timestamp",
            LedgerError::ZeroRawSize => "zero-raw-size",
            LedgerError::CompressedExceedsRaw { .. } => "compressed-exceeds-raw",
            LedgerError::Codec(_) => "codec",
        }
    }
}

/// A signed UAV transaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub id: Digest,
    pub sender: NodeId,
    pub submit_time: Timestamp,
    pub payload: Vec<u8>,
    pub signature: Signature,
}

/// Canonical encoding without the signature: sender (u32), submit time
/// (i64 microseconds), payload (u32 length + bytes). All little-endian.
pub fn canonical_encoding(sender: NodeId, submit_time: Timestamp, payload: &[u8]) -> Vec<u8> {
    let mut w = Writer::with_capacity(16 + payload.len());
    w.u32(sender.0).i64(submit_time.micros()).bytes(payload);
    w.into_inner()
}

impl Transaction {
    pub fn signed(
        sender: NodeId,
        submit_time: Timestamp,
        payload: Vec<u8>,
        key: &PrivateKey,
    ) -> Result<Self, crypto::CryptoError> {
        let id = hash(&canonical_encoding(sender, submit_time, &payload));
        let signature = crypto::sign(key, &id)?;
        Ok(Transaction { id, sender, submit_time, payload, signature })
    }

    pub fn compute_id(&self) -> Digest {
        hash(&canonical_encoding(self.sender, self.submit_time, &self.payload))
    }

    /// Recomputes the id from the contents and checks the signature over it.
    pub fn verify(&self, key: &PublicKey) -> bool {
        self.compute_id() == self.id && crypto::verify(&self.id, &self.signature, key)
    }

    /// Encoded length inside a block body.
    pub fn wire_len(&self) -> usize {
        4 + 4 + 8 + 4 + self.payload.len() + 1 + 4 + self.signature.bytes.len()
    }

    /// Canonical encoding followed by scheme tag and length-prefixed signature,
    /// itself wrapped in a u32 length prefix.
    pub fn encode_into(&self, w: &mut Writer) {
        let inner = 8 + 4 + self.payload.len() + 4 + 1 + 4 + self.signature.bytes.len();
        w.u32(inner as u32);
        w.u32(self.sender.0).i64(self.submit_time.micros()).bytes(&self.payload);
        w.u8(self.signature.scheme.tag()).bytes(&self.signature.bytes);
    }

    pub fn decode(data: &[u8]) -> Result<Self, String> {
        let mut r = wire::Reader::new(data);
        let err = |e: wire::Truncated| e.to_string();
        let sender = NodeId(r.u32().map_err(err)?);
        let submit_time = Timestamp(r.i64().map_err(err)?);
        let payload = r.bytes().map_err(err)?.to_vec();
        let tag = r.u8().map_err(err)?;
        let scheme = SchemeId::from_tag(tag).ok_or_else(|| format!("unknown scheme tag {tag}"))?;
        let sig = r.bytes().map_err(err)?.to_vec();
        if !r.is_empty() {
            return Err(format!("{} trailing bytes", r.remaining()));
        }
        let id = hash(&canonical_encoding(sender, submit_time, &payload));
        Ok(Transaction { id, sender, submit_time, payload, signature: Signature { bytes: sig, scheme } })
    }
}

/// Components of the block utility score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockScore {
    /// η_B: number of valid transactions.
    pub valid_count: u32,
    /// ζ_B: freshness in [0, 1].
    pub freshness: f64,
    /// θ_B: consensus energy cost in joules.
    pub energy_cost: f64,
    /// C(B) = α·η + β·ζ − γ·θ.
    pub utility: f64,
}

/// Weights of the block utility C(B) = α·η + β·ζ − γ·θ.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UtilityParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams { alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }
}

impl UtilityParams {
    pub fn is_valid(&self) -> bool {
        let w = [self.alpha, self.beta, self.gamma];
        w.iter().all(|v| v.is_finite() && *v >= 0.0) && w.iter().any(|v| *v > 0.0)
    }

    pub fn utility(&self, valid_count: u32, freshness: f64, energy_cost: f64) -> f64 {
        self.alpha * valid_count as f64 + self.beta * freshness - self.gamma * energy_cost
    }

    pub fn score(&self, valid_count: u32, freshness: f64, energy_cost: f64) -> BlockScore {
        BlockScore { valid_count, freshness, energy_cost, utility: self.utility(valid_count, freshness, energy_cost) }
    }
}

/// Block metadata μ = (blockID, hashPrev, merkleRoot, timestamp).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMetadata {
    pub block_id: Digest,
    pub hash_prev: Digest,
    pub merkle_root: Digest,
    pub timestamp: Timestamp,
}

impl BlockMetadata {
    /// Genesis metadata: block_id = hash("genesis" || seed), no parent, no transactions.
    pub fn genesis(seed: u64) -> Self {
        BlockMetadata {
            block_id: hash_parts(&[b"genesis", &seed.to_le_bytes()]),
            hash_prev: Digest::default(),
            merkle_root: Digest::default(),
            timestamp: Timestamp::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub metadata: BlockMetadata,
    pub transactions: Vec<Transaction>,
    pub proposer: NodeId,
    pub raw_size: u64,
    pub compressed_size: u64,
    pub score: BlockScore,
}

/// Canonical block encoding that is measured and compressed. The block id
/// and the sizes are excluded since they are derived from it.
pub fn body_encoding(
    hash_prev: &Digest,
    merkle_root: &Digest,
    timestamp: Timestamp,
    proposer: NodeId,
    score: &BlockScore,
    transactions: &[Transaction],
) -> Vec<u8> {
    let cap = 128 + transactions.iter().map(Transaction::wire_len).sum::<usize>();
    let mut w = Writer::with_capacity(cap);
    w.raw(&hash_prev.0).raw(&merkle_root.0).i64(timestamp.micros()).u32(proposer.0);
    w.u32(score.valid_count).f64(score.freshness).f64(score.energy_cost).f64(score.utility);
    w.u32(transactions.len() as u32);
    for tx in transactions {
        tx.encode_into(&mut w);
    }
    w.into_inner()
}

fn block_id(
    hash_prev: &Digest,
    merkle_root: &Digest,
    timestamp: Timestamp,
    proposer: NodeId,
    score: &BlockScore,
    raw_size: u64,
    compressed_size: u64,
) -> Digest {
    let mut w = Writer::with_capacity(160);
    w.raw(b"block").raw(&hash_prev.0).raw(&merkle_root.0).i64(timestamp.micros()).u32(proposer.0);
    w.u32(score.valid_count).f64(score.freshness).f64(score.energy_cost).f64(score.utility);
    w.u64(raw_size).u64(compressed_size);
    hash(&w.into_inner())
}

impl Block {
    /// Compute the Merkle root, compress the body and derive the block id.
    pub fn seal(
        hash_prev: Digest,
        timestamp: Timestamp,
        proposer: NodeId,
        transactions: Vec<Transaction>,
        score: BlockScore,
        codec: Codec,
    ) -> Result<(Block, CompressionOutcome), LedgerError> {
        let ids: Vec<Digest> = transactions.iter().map(|t| t.id).collect();
        let merkle_root = merkle_root(&ids)?;
        let body = body_encoding(&hash_prev, &merkle_root, timestamp, proposer, &score, &transactions);
        let outcome = compress_bytes(&body, codec);
        let block_id = block_id(
            &hash_prev,
            &merkle_root,
            timestamp,
            proposer,
            &score,
            outcome.raw_size,
            outcome.compressed_size,
        );
        let block = Block {
            metadata: BlockMetadata { block_id, hash_prev, merkle_root, timestamp },
            transactions,
            proposer,
            raw_size: outcome.raw_size,
            compressed_size: outcome.compressed_size,
            score,
        };
        Ok((block, outcome))
    }

    pub fn body(&self) -> Vec<u8> {
        body_encoding(
            &self.metadata.hash_prev,
            &self.metadata.merkle_root,
            self.metadata.timestamp,
            self.proposer,
            &self.score,
            &self.transactions,
        )
    }

    pub fn compression_ratio(&self) -> f64 {
        compression_ratio(self.raw_size, self.compressed_size).unwrap_or(0.0)
    }

    /// Re-check every commitment that can be recomputed from the block alone:
    /// Merkle root, sizes (by recompressing with `codec`) and block id.
    pub fn check_commitments(&self, codec: Codec) -> Result<(), LedgerError> {
        let ids: Vec<Digest> = self.transactions.iter().map(Transaction::compute_id).collect();
        if merkle_root(&ids)? != self.metadata.merkle_root {
            return Err(LedgerError::MerkleMismatch);
        }
        if ids.iter().zip(&self.transactions).any(|(a, t)| *a != t.id) {
            return Err(LedgerError::MerkleMismatch);
        }
        compression_ratio(self.raw_size, self.compressed_size)?;
        let outcome = compress_bytes(&self.body(), codec);
        if outcome.raw_size != self.raw_size || outcome.compressed_size != self.compressed_size {
            return Err(LedgerError::SizeViolation(format!(
                "recorded {}/{} bytes, recomputed {}/{}",
                self.raw_size, self.compressed_size, outcome.raw_size, outcome.compressed_size
            )));
        }
        self.check_id()
    }

    /// Block id check alone (no recompression).
    pub fn check_id(&self) -> Result<(), LedgerError> {
        let m = &self.metadata;
        let expected = block_id(
            &m.hash_prev,
            &m.merkle_root,
            m.timestamp,
            self.proposer,
            &self.score,
            self.raw_size,
            self.compressed_size,
        );
        if expected != m.block_id {
            return Err(LedgerError::BlockIdMismatch);
        }
        Ok(())
    }
}

/// Append-only chain Ω_j owned by one edge node.
#[derive(Debug, Clone)]
pub struct LedgerSegment {
    pub owner: NodeId,
    pub genesis: BlockMetadata,
    pub chain: Vec<Block>,
    committed: HashSet<Digest>,
}

impl LedgerSegment {
    pub fn new(owner: NodeId, genesis: BlockMetadata) -> Self {
        LedgerSegment { owner, genesis, chain: Vec::new(), committed: HashSet::new() }
    }

    pub fn tip(&self) -> &BlockMetadata {
        self.chain.last().map(|b| &b.metadata).unwrap_or(&self.genesis)
    }

    pub fn height(&self) -> usize {
        self.chain.len()
    }

    pub fn contains_tx(&self, id: &Digest) -> bool {
        self.committed.contains(id)
    }

    pub fn tx_count(&self) -> usize {
        self.committed.len()
    }

    /// Structural checks shared by append and by committee validation.
    pub fn check_extends(&self, block: &Block, max_block_bytes: u64) -> Result<(), LedgerError> {
        let tip = self.tip();
        if block.transactions.is_empty() {
            return Err(LedgerError::EmptyBlock);
        }
        if block.metadata.hash_prev != tip.block_id {
            return Err(LedgerError::Linkage {
                expected: tip.block_id.short(),
                found: block.metadata.hash_prev.short(),
            });
        }
        if block.metadata.timestamp <= tip.timestamp {
            return Err(LedgerError::NonMonotonicTimestamp { parent: tip.timestamp, found: block.metadata.timestamp });
        }
        if block.compressed_size == 0 || block.compressed_size > block.raw_size {
            return Err(LedgerError::SizeViolation(format!(
                "compressed {} raw {}",
                block.compressed_size, block.raw_size
            )));
        }
        if block.compressed_size > max_block_bytes {
            return Err(LedgerError::SizeViolation(format!(
                "{} bytes exceeds limit {}",
                block.compressed_size, max_block_bytes
            )));
        }
        let mut seen = HashSet::with_capacity(block.transactions.len());
        for tx in &block.transactions {
            if !seen.insert(tx.id) || self.committed.contains(&tx.id) {
                return Err(LedgerError::DuplicateTransaction(tx.id.short()));
            }
        }
        let ids: Vec<Digest> = block.transactions.iter().map(|t| t.id).collect();
        if merkle_root(&ids)? != block.metadata.merkle_root {
            return Err(LedgerError::MerkleMismatch);
        }
        block.check_id()
    }

    pub fn append_block(&mut self, block: Block, max_block_bytes: u64) -> Result<(), LedgerError> {
        self.check_extends(&block, max_block_bytes)?;
        self.committed.extend(block.transactions.iter().map(|t| t.id));
        self.chain.push(block);
        Ok(())
    }

    /// Rebuild from stored blocks without re-validating (used by dump loading).
    pub(crate) fn from_parts(owner: NodeId, genesis: BlockMetadata, chain: Vec<Block>) -> Self {
        let committed = chain.iter().flat_map(|b| b.transactions.iter().map(|t| t.id)).collect();
        LedgerSegment { owner, genesis, chain, committed }
    }
}
