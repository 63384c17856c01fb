//! Poisson transaction arrivals, telemetry payloads and the adversary model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::config::Behavior;
use crate::crypto::PrivateKey;
use crate::ledger::Transaction;
use crate::types::{NodeId, Timestamp};

/// Exponential inter-arrival time for a Poisson process of `rate` per second.
pub fn next_arrival<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    Exp::new(rate).expect("rate must be positive").sample(rng)
}

/// Uniform choice among `alive`, or `None` when no UAV is left.
pub fn pick_sender<R: Rng + ?Sized>(alive: &[NodeId], rng: &mut R) -> Option<NodeId> {
    if alive.is_empty() {
        None
    } else {
        Some(alive[rng.random_range(0..alive.len())])
    }
}

/// Crop telemetry payloads: JSON-like sensor records followed by an opaque
/// binary tail that stands in for image tiles and other incompressible data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadGenerator {
    pub min_bytes: usize,
    pub max_bytes: usize,
    /// Fraction of each payload that is random bytes.
    pub entropy: f64,
}

impl PayloadGenerator {
    pub fn generate<R: Rng + ?Sized>(&self, uav: NodeId, now: f64, rng: &mut R) -> Vec<u8> {
        let len = rng.random_range(self.min_bytes..=self.max_bytes);
        let opaque = ((len as f64) * self.entropy).round() as usize;
        let text_len = len - opaque.min(len);
        let mut text = String::with_capacity(text_len + 256);
        let field = uav.0 % 24;
        let mut seq = 0u32;
        while text.len() < text_len {
            let _ = write!(
                text,
                "{{\"uav\":{},\"seq\":{},\"t\":{:.2},\"field\":\"F{:02}\",\"lat\":{:.5},\"lon\":{:.5},\"alt\":{:.1},\
                 \"ndvi\":{:.3},\"soil_moisture\":{:.3},\"temp_c\":{:.2},\"humidity\":{:.1},\"status\":\"ok\"}}\n",
                uav.0,
                seq,
                now + seq as f64 * 0.1,
                field,
                38.5 + rng.random_range(0.0..0.03),
                -121.7 + rng.random_range(0.0..0.03),
                rng.random_range(50.0..150.0),
                rng.random_range(0.2..0.9),
                rng.random_range(0.1..0.45),
                rng.random_range(12.0..35.0),
                rng.random_range(20.0..90.0),
            );
            seq += 1;
        }
        let mut out = text.into_bytes();
        out.truncate(text_len);
        let start = out.len();
        out.resize(len, 0);
        rng.fill_bytes(&mut out[start..]);
        out
    }
}

/// Choose ⌊fraction·n⌋ nodes uniformly, assigning behaviors round-robin in
/// ascending id order.
pub fn assign_compromised<R: Rng + ?Sized>(
    nodes: &[NodeId],
    fraction: f64,
    behaviors: &[Behavior],
    rng: &mut R,
) -> BTreeMap<NodeId, Behavior> {
    let k = ((fraction * nodes.len() as f64) + 1e-9).floor() as usize;
    let k = k.min(nodes.len());
    if k == 0 || behaviors.is_empty() {
        return BTreeMap::new();
    }
    let mut chosen: Vec<NodeId> = sample(rng, nodes.len(), k).into_iter().map(|i| nodes[i]).collect();
    chosen.sort();
    chosen.into_iter().enumerate().map(|(i, n)| (n, behaviors[i % behaviors.len()])).collect()
}

/// Context a compromised UAV needs to misbehave.
pub struct CorruptionContext<'a> {
    pub key: &'a PrivateKey,
    /// Committed transactions available for replay.
    pub committed: &'a [Transaction],
    pub tau_max: f64,
}

/// Apply `behavior` to an honestly generated transaction.
///
/// Replay with nothing committed yet leaves the transaction unchanged.
pub fn corrupt<R: Rng + ?Sized>(
    tx: Transaction,
    behavior: Behavior,
    ctx: &CorruptionContext<'_>,
    rng: &mut R,
) -> Transaction {
    match behavior {
        Behavior::ForgeSignature => {
            let mut t = tx;
            rng.fill_bytes(&mut t.signature.bytes);
            t
        }
        Behavior::Replay => {
            if ctx.committed.is_empty() {
                tx
            } else {
                ctx.committed[rng.random_range(0..ctx.committed.len())].clone()
            }
        }
        Behavior::DelayInjection => {
            let back = ctx.tau_max + rng.random_range(1.0..10.0);
            let when = Timestamp::from_secs(tx.submit_time.as_secs() - back);
            Transaction::signed(tx.sender, when, tx.payload, ctx.key).expect("compromised UAV holds a valid key")
        }
        Behavior::VoteReject => tx,
    }
}
