use thiserror::Error;

use super::pool::{PooledTx, ValidationPool};
use crate::ledger::{Block, BlockScore, Codec, CompressionOutcome, LedgerError, Transaction, UtilityParams};
use crate::types::{Digest, NodeId, Timestamp};

#[derive(Debug, Error, PartialEq)]
pub enum AssembleError {
    #[error("validation pool is empty")]
    EmptyPool,
    #[error("no transaction fits in a block of {0} bytes")]
    NothingFits(u64),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// ζ_B = mean over transactions of max(0, 1 − age/τ_max).
pub fn freshness(txs: &[Transaction], now: Timestamp, tau_max: f64) -> f64 {
    if txs.is_empty() {
        return 0.0;
    }
    let sum: f64 = txs.iter().map(|t| tx_freshness(t, now, tau_max)).sum();
    sum / txs.len() as f64
}

fn tx_freshness(tx: &Transaction, now: Timestamp, tau_max: f64) -> f64 {
    let age = (now.as_secs() - tx.submit_time.as_secs()).max(0.0);
    (1.0 - age / tau_max).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockLimits {
    /// Bound on the compressed block size.
    pub max_block_bytes: u64,
    pub max_txs: usize,
    pub codec: Codec,
    pub tau_max: f64,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub block: Block,
    pub score: BlockScore,
    pub compression: CompressionOutcome,
    /// Pool tags of the included transactions, in block order.
    pub tags: Vec<u64>,
    /// Number of trial seals performed to meet the size bound.
    pub attempts: u32,
}

/// Greedy block assembly.
///
/// Pool entries are ordered by descending freshness (ties by lowest sender,
/// then lowest id). Among the prefixes of that order that fit the size and
/// count limits, the one with the largest utility C(B) is sealed. `theta`
/// maps a transaction count to the block's consensus energy cost θ_B.
pub fn assemble_block(
    pool: &ValidationPool,
    params: &UtilityParams,
    limits: &BlockLimits,
    hash_prev: Digest,
    proposer: NodeId,
    now: Timestamp,
    theta: &dyn Fn(usize) -> f64,
) -> Result<Assembled, AssembleError> {
    if pool.is_empty() {
        return Err(AssembleError::EmptyPool);
    }
    let mut order: Vec<(&PooledTx, f64)> =
        pool.iter().map(|e| (e, tx_freshness(&e.tx, now, limits.tau_max))).collect();
    order.sort_by(|(a, fa), (b, fb)| {
        fb.total_cmp(fa)
            .then_with(|| a.tx.sender.cmp(&b.tx.sender))
            .then_with(|| a.tx.id.cmp(&b.tx.id))
    });
    order.truncate(limits.max_txs.max(1));

    let seal = |k: usize| -> Result<(Block, CompressionOutcome), AssembleError> {
        let txs: Vec<Transaction> = order[..k].iter().map(|(e, _)| e.tx.clone()).collect();
        let zeta = freshness(&txs, now, limits.tau_max);
        let score = params.score(k as u32, zeta, theta(k));
        Ok(Block::seal(hash_prev, now, proposer, txs, score, limits.codec)?)
    };

    // Largest prefix that fits: raw size bounds the compressed size, so the
    // raw prefix is feasible; beyond it, search using measured ratios.
    let overhead = 32 + 32 + 8 + 4 + 4 + 8 * 3 + 4;
    let mut raw = vec![overhead as u64; order.len() + 1];
    for (i, (e, _)) in order.iter().enumerate() {
        raw[i + 1] = raw[i] + e.tx.wire_len() as u64;
    }
    let limit = limits.max_block_bytes;
    let fits_raw = raw.iter().rposition(|&r| r <= limit).unwrap_or(0);
    let mut lo = fits_raw;
    let mut hi = order.len();
    let mut attempts = 0u32;
    let mut best: Option<(usize, Block, CompressionOutcome)> = None;
    if lo < hi {
        let mut guess = hi;
        while lo < hi && attempts < 12 {
            attempts += 1;
            let (block, out) = seal(guess)?;
            if out.compressed_size <= limit {
                lo = guess;
                best = Some((guess, block, out));
                if guess == hi {
                    break;
                }
            } else {
                hi = guess - 1;
            }
            if hi - lo <= (lo / 500).max(1) {
                break;
            }
            // Aim just under the limit with the ratio just observed.
            let ratio = out.compressed_size as f64 / out.raw_size as f64;
            let target = (limit as f64 * 0.998 / ratio) as u64;
            let est = raw.partition_point(|&r| r <= target).saturating_sub(1);
            guess = est.clamp(lo + 1, hi);
        }
    }
    if lo == 0 {
        return Err(AssembleError::NothingFits(limit));
    }

    // Utility-maximizing prefix among 1..=lo.
    let mut best_k = 0;
    let mut best_c = f64::NEG_INFINITY;
    let mut fsum = 0.0;
    for k in 1..=lo {
        fsum += order[k - 1].1;
        let c = params.utility(k as u32, fsum / k as f64, theta(k));
        if c > best_c {
            best_c = c;
            best_k = k;
        }
    }

    let (block, compression) = match best {
        Some((k, b, o)) if k == best_k => (b, o),
        _ => {
            attempts += 1;
            let mut k = best_k;
            loop {
                let (b, o) = seal(k)?;
                if o.compressed_size <= limit || k == 1 {
                    break (b, o);
                }
                attempts += 1;
                k = (k * 99 / 100).max(1);
            }
        }
    };
    if block.compressed_size > limit {
        return Err(AssembleError::NothingFits(limit));
    }
    let tags = order[..block.transactions.len()].iter().map(|(e, _)| e.tag).collect();
    Ok(Assembled { score: block.score, block, compression, tags, attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{keygen, KeyPair, PublicKey, SchemeId};
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn keys(n: u32) -> (Vec<KeyPair>, BTreeMap<NodeId, PublicKey>) {
        let ks: Vec<KeyPair> = (0..n).map(|i| keygen(i as u64, SchemeId::MockSig).unwrap()).collect();
        let reg = ks.iter().enumerate().map(|(i, k)| (NodeId(i as u32), k.public.clone())).collect();
        (ks, reg)
    }

    fn limits(max: u64) -> BlockLimits {
        BlockLimits { max_block_bytes: max, max_txs: usize::MAX, codec: Codec::Deflate, tau_max: 60.0 }
    }

    fn pool_with(txs: &[(u32, f64, Vec<u8>)]) -> ValidationPool {
        let (ks, reg) = keys(16);
        let mut pool = ValidationPool::new(NodeId(100), 1 << 20, 60.0);
        for (i, (s, t, p)) in txs.iter().enumerate() {
            let tx = Transaction::signed(NodeId(*s), Timestamp::from_secs(*t), p.clone(), &ks[*s as usize].private).unwrap();
            pool.admit(tx, &reg, Timestamp::from_secs(*t + 0.01), i as u64);
        }
        pool
    }

    #[test]
    fn freshness_examples() {
        let (ks, _) = keys(1);
        let mk = |t: f64| Transaction::signed(NodeId(0), Timestamp::from_secs(t), vec![1], &ks[0].private).unwrap();
        let now = Timestamp::from_secs(100.0);
        assert_eq!(freshness(&[mk(100.0), mk(100.0)], now, 60.0), 1.0);
        assert_eq!(freshness(&[mk(40.0), mk(0.0)], now, 60.0), 0.0);
        assert_eq!(freshness(&[mk(100.0), mk(70.0)], now, 60.0), 0.75);
    }

    #[test]
    fn small_pool_all_included() {
        let pool = pool_with(&[(1, 1.0, vec![1; 600]), (2, 2.0, vec![2; 600]), (3, 3.0, vec![3; 600])]);
        let p = UtilityParams { alpha: 1.0, beta: 0.0, gamma: 0.0 };
        let a = assemble_block(&pool, &p, &limits(2_000_000), Digest::default(), NodeId(100), Timestamp::from_secs(15.0), &|_| 0.0)
            .unwrap();
        assert_eq!(a.score.valid_count, 3);
        assert_eq!(a.score.utility, 3.0);
        // Freshest first.
        let senders: Vec<u32> = a.block.transactions.iter().map(|t| t.sender.0).collect();
        assert_eq!(senders, vec![3, 2, 1]);
        assert_eq!(a.tags, vec![2, 1, 0]);
    }

    #[test]
    fn utility_hand_value() {
        let p = UtilityParams { alpha: 1.0, beta: 2.0, gamma: 0.1 };
        assert!((p.utility(10, 0.8, 4.0) - 11.2).abs() < 1e-12);
        let s = p.score(10, 0.8, 4.0);
        assert_eq!(s.utility.to_bits(), p.utility(s.valid_count, s.freshness, s.energy_cost).to_bits());
    }

    #[test]
    fn empty_pool_signals_no_proposal() {
        let pool = ValidationPool::new(NodeId(1), 10, 60.0);
        let r = assemble_block(&pool, &UtilityParams::default(), &limits(1000), Digest::default(), NodeId(1), Timestamp(1), &|_| 0.0);
        assert_eq!(r.unwrap_err(), AssembleError::EmptyPool);
    }

    #[test]
    fn ties_break_by_sender() {
        let pool = pool_with(&[(5, 1.0, vec![1; 100]), (2, 1.0, vec![2; 100]), (9, 1.0, vec![3; 100])]);
        let a = assemble_block(&pool, &UtilityParams::default(), &limits(1 << 20), Digest::default(), NodeId(1), Timestamp::from_secs(2.0), &|_| 0.0)
            .unwrap();
        let senders: Vec<u32> = a.block.transactions.iter().map(|t| t.sender.0).collect();
        assert_eq!(senders, vec![2, 5, 9]);
    }

    #[test]
    fn compressed_bound_is_met_and_nearly_filled() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut txs = Vec::new();
        for i in 0..400u32 {
            let mut p = b"{\"ndvi\":0.51,\"soil\":0.22}".repeat(40);
            let k = p.len() / 3;
            rng.fill_bytes(&mut p[..k]);
            txs.push((i % 16, i as f64 * 0.01, p));
        }
        let pool = pool_with(&txs);
        let limit = 100_000;
        let a = assemble_block(&pool, &UtilityParams::default(), &limits(limit), Digest::default(), NodeId(1), Timestamp::from_secs(10.0), &|k| k as f64 * 0.01)
            .unwrap();
        assert!(a.block.compressed_size <= limit);
        assert!(a.block.raw_size > limit, "bound applies to compressed bytes");
        assert!(a.block.compressed_size as f64 > 0.97 * limit as f64, "{}", a.block.compressed_size);
        assert!(a.attempts <= 14);
    }

    #[test]
    fn high_energy_weight_shrinks_block() {
        let pool = pool_with(&[(1, 1.0, vec![1; 100]), (2, 1.0, vec![2; 100]), (3, 1.0, vec![3; 100])]);
        let p = UtilityParams { alpha: 1.0, beta: 0.0, gamma: 1.0 };
        // θ(k) = 0.4 + 2k: every extra transaction costs more than it adds.
        let a = assemble_block(&pool, &p, &limits(1 << 20), Digest::default(), NodeId(1), Timestamp::from_secs(2.0), &|k| 0.4 + 2.0 * k as f64)
            .unwrap();
        assert_eq!(a.score.valid_count, 1);
    }
}
