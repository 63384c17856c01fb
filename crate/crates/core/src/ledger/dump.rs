//! Binary ledger dump. Layout is documented in `docs/FORMATS.md`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::wire::{Reader, Truncated, Writer};
use super::{Block, BlockMetadata, BlockScore, Codec, LedgerSegment, Transaction, UtilityParams};
use crate::crypto::{PublicKey, SchemeId};
use crate::types::{Digest, NodeId, Timestamp};

pub const MAGIC: &[u8; 8] = b"UAVLEDG1";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum DumpError {
    #[error("not a ledger dump (bad magic)")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed {context}: {detail}")]
    Malformed { context: String, detail: String },
    #[error("segment {owner} block {index}: {detail}")]
    Block { owner: NodeId, index: usize, detail: String },
}

/// Parameters needed to re-verify a dump without the originating scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpHeader {
    pub seed: u64,
    pub codec: Codec,
    pub signature_scheme: SchemeId,
    pub utility: UtilityParams,
    pub max_block_bytes: u64,
}

/// A segment as read from disk. Blocks that fail to parse are kept as errors
/// so that an audit can report them by position.
#[derive(Debug, Clone)]
pub struct DumpedSegment {
    pub owner: NodeId,
    pub genesis: BlockMetadata,
    pub blocks: Vec<Result<Block, String>>,
}

#[derive(Debug, Clone)]
pub struct LedgerDump {
    pub header: DumpHeader,
    pub registry: BTreeMap<NodeId, PublicKey>,
    pub segments: Vec<DumpedSegment>,
}

impl LedgerDump {
    /// Strict conversion: the first unparsable block is an error.
    pub fn into_segments(self) -> Result<Vec<LedgerSegment>, DumpError> {
        self.segments
            .into_iter()
            .map(|s| {
                let chain = s
                    .blocks
                    .into_iter()
                    .enumerate()
                    .map(|(index, b)| b.map_err(|detail| DumpError::Block { owner: s.owner, index, detail }))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(LedgerSegment::from_parts(s.owner, s.genesis, chain))
            })
            .collect()
    }
}

fn write_metadata(w: &mut Writer, m: &BlockMetadata) {
    w.raw(&m.block_id.0).raw(&m.hash_prev.0).raw(&m.merkle_root.0).i64(m.timestamp.micros());
}

fn read_metadata(r: &mut Reader) -> Result<BlockMetadata, Truncated> {
    Ok(BlockMetadata {
        block_id: Digest(r.digest()?),
        hash_prev: Digest(r.digest()?),
        merkle_root: Digest(r.digest()?),
        timestamp: Timestamp(r.i64()?),
    })
}

/// Block record: block id, raw size, compressed size, then the canonical body.
fn block_record(block: &Block) -> Vec<u8> {
    let body = block.body();
    let mut w = Writer::with_capacity(48 + body.len());
    w.raw(&block.metadata.block_id.0).u64(block.raw_size).u64(block.compressed_size).raw(&body);
    w.into_inner()
}

fn parse_block(record: &[u8]) -> Result<Block, String> {
    let mut r = Reader::new(record);
    let t = |e: Truncated| e.to_string();
    let block_id = Digest(r.digest().map_err(t)?);
    let raw_size = r.u64().map_err(t)?;
    let compressed_size = r.u64().map_err(t)?;
    let hash_prev = Digest(r.digest().map_err(t)?);
    let merkle_root = Digest(r.digest().map_err(t)?);
    let timestamp = Timestamp(r.i64().map_err(t)?);
    let proposer = NodeId(r.u32().map_err(t)?);
    let score = BlockScore {
        valid_count: r.u32().map_err(t)?,
        freshness: r.f64().map_err(t)?,
        energy_cost: r.f64().map_err(t)?,
        utility: r.f64().map_err(t)?,
    };
    let count = r.u32().map_err(t)? as usize;
    if count > r.remaining() {
        return Err(format!("transaction count {count} exceeds record"));
    }
    let mut transactions = Vec::with_capacity(count);
    for i in 0..count {
        let bytes = r.bytes().map_err(|e| format!("transaction {i}: {e}"))?;
        transactions.push(Transaction::decode(bytes).map_err(|e| format!("transaction {i}: {e}"))?);
    }
    if !r.is_empty() {
        return Err(format!("{} trailing bytes", r.remaining()));
    }
    Ok(Block {
        metadata: BlockMetadata { block_id, hash_prev, merkle_root, timestamp },
        transactions,
        proposer,
        raw_size,
        compressed_size,
        score,
    })
}

pub fn encode_dump(
    header: &DumpHeader,
    registry: &BTreeMap<NodeId, PublicKey>,
    segments: &[LedgerSegment],
) -> Vec<u8> {
    let mut w = Writer::default();
    w.raw(MAGIC).u32(VERSION).u64(header.seed);
    w.bytes(header.codec.name().as_bytes()).u8(header.signature_scheme.tag());
    w.f64(header.utility.alpha).f64(header.utility.beta).f64(header.utility.gamma);
    w.u64(header.max_block_bytes);

    w.u32(registry.len() as u32);
    for (node, key) in registry {
        w.u32(node.0).u8(key.scheme.tag()).bytes(&key.bytes);
    }

    w.u32(segments.len() as u32);
    for seg in segments {
        w.u32(seg.owner.0);
        write_metadata(&mut w, &seg.genesis);
        w.u32(seg.chain.len() as u32);
        for block in &seg.chain {
            w.bytes(&block_record(block));
        }
    }
    w.into_inner()
}

pub fn decode_dump(data: &[u8]) -> Result<LedgerDump, DumpError> {
    let mut r = Reader::new(data);
    let ctx = |context: &str| {
        let context = context.to_string();
        move |e: Truncated| DumpError::Malformed { context: context.clone(), detail: e.to_string() }
    };
    if r.take(8).map_err(|_| DumpError::BadMagic)? != MAGIC {
        return Err(DumpError::BadMagic);
    }
    let version = r.u32().map_err(ctx("header"))?;
    if version != VERSION {
        return Err(DumpError::UnsupportedVersion(version));
    }
    let seed = r.u64().map_err(ctx("header"))?;
    let codec_name = r.bytes().map_err(ctx("header"))?;
    let codec = std::str::from_utf8(codec_name)
        .ok()
        .and_then(|s| s.parse::<Codec>().ok())
        .ok_or_else(|| DumpError::Malformed { context: "header".into(), detail: "unknown codec".into() })?;
    let tag = r.u8().map_err(ctx("header"))?;
    let signature_scheme = SchemeId::from_tag(tag)
        .ok_or_else(|| DumpError::Malformed { context: "header".into(), detail: format!("scheme tag {tag}") })?;
    let utility = UtilityParams {
        alpha: r.f64().map_err(ctx("header"))?,
        beta: r.f64().map_err(ctx("header"))?,
        gamma: r.f64().map_err(ctx("header"))?,
    };
    let max_block_bytes = r.u64().map_err(ctx("header"))?;
    let header = DumpHeader { seed, codec, signature_scheme, utility, max_block_bytes };

    let n_keys = r.u32().map_err(ctx("registry"))?;
    let mut registry = BTreeMap::new();
    for _ in 0..n_keys {
        let node = NodeId(r.u32().map_err(ctx("registry"))?);
        let tag = r.u8().map_err(ctx("registry"))?;
        let scheme = SchemeId::from_tag(tag)
            .ok_or_else(|| DumpError::Malformed { context: "registry".into(), detail: format!("scheme tag {tag}") })?;
        let bytes = r.bytes().map_err(ctx("registry"))?.to_vec();
        registry.insert(node, PublicKey { bytes, scheme });
    }

    let n_segments = r.u32().map_err(ctx("segment table"))?;
    let mut segments = Vec::new();
    for s in 0..n_segments {
        let here = format!("segment {s}");
        let owner = NodeId(r.u32().map_err(ctx(&here))?);
        let genesis = read_metadata(&mut r).map_err(ctx(&here))?;
        let n_blocks = r.u32().map_err(ctx(&here))? as usize;
        let mut blocks = Vec::new();
        for index in 0..n_blocks {
            let record = r
                .bytes()
                .map_err(|e| DumpError::Block { owner, index, detail: e.to_string() })?;
            blocks.push(parse_block(record));
        }
        segments.push(DumpedSegment { owner, genesis, blocks });
    }
    if !r.is_empty() {
        return Err(DumpError::Malformed { context: "trailer".into(), detail: format!("{} extra bytes", r.remaining()) });
    }
    Ok(LedgerDump { header, registry, segments })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::crypto::keygen;

    pub(crate) fn sample() -> (DumpHeader, BTreeMap<NodeId, PublicKey>, Vec<LedgerSegment>) {
        let header = DumpHeader {
            seed: 4,
            codec: Codec::Deflate,
            signature_scheme: SchemeId::MockSig,
            utility: UtilityParams::default(),
            max_block_bytes: 2_000_000,
        };
        let mut registry = BTreeMap::new();
        let keys: Vec<_> = (0..3).map(|i| keygen(i, SchemeId::MockSig).unwrap()).collect();
        for (i, k) in keys.iter().enumerate() {
            registry.insert(NodeId(i as u32), k.public.clone());
        }
        let mut seg = LedgerSegment::new(NodeId(10), BlockMetadata::genesis(4));
        for b in 0..2 {
            let txs: Vec<_> = (0..3)
                .map(|i| {
                    let t = Timestamp::from_secs(b as f64 * 15.0 + i as f64);
                    Transaction::signed(NodeId(i), t, format!("b{b}t{i}").into_bytes(), &keys[i as usize].private)
                        .unwrap()
                })
                .collect();
            let score = header.utility.score(3, 0.9, 0.1);
            let ts = Timestamp::from_secs(15.0 * (b + 1) as f64);
            let (block, _) = Block::seal(seg.tip().block_id, ts, NodeId(10), txs, score, Codec::Deflate).unwrap();
            seg.append_block(block, header.max_block_bytes).unwrap();
        }
        let empty = LedgerSegment::new(NodeId(11), BlockMetadata::genesis(4));
        (header, registry, vec![seg, empty])
    }

    #[test]
    fn round_trip() {
        let (h, reg, segs) = sample();
        let bytes = encode_dump(&h, &reg, &segs);
        let dump = decode_dump(&bytes).unwrap();
        assert_eq!(dump.header, h);
        assert_eq!(dump.registry, reg);
        let back = dump.into_segments().unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].chain, segs[0].chain);
        assert_eq!(back[1].height(), 0);
        assert_eq!(back[0].tx_count(), 6);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let (h, reg, segs) = sample();
        let bytes = encode_dump(&h, &reg, &segs);
        assert_eq!(decode_dump(b"NOTADUMP").unwrap_err(), DumpError::BadMagic);
        assert!(decode_dump(&bytes[..bytes.len() - 3]).is_err());
    }
}
