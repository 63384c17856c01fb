//! UAV trust evolution, normalized trust rank and edge committee weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("{name} = {value} outside {range}")]
    OutOfRange { name: &'static str, value: f64, range: &'static str },
    #[error("no scores to rank")]
    Empty,
    #[error("empty edge assignment")]
    EmptyAssignment,
    #[error("uav {0} has no trust score")]
    UnknownUav(NodeId),
}

fn unit(name: &'static str, value: f64) -> Result<f64, TrustError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(TrustError::OutOfRange { name, value, range: "[0, 1]" })
    }
}

/// Weights of the behavior score components. Must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorWeights {
    pub valid: f64,
    pub timely: f64,
    pub uptime: f64,
}

impl Default for BehaviorWeights {
    fn default() -> Self {
        BehaviorWeights { valid: 0.5, timely: 0.3, uptime: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    pub lambda: f64,
    pub initial_score: f64,
    pub weights: BehaviorWeights,
}

impl Default for TrustParams {
    fn default() -> Self {
        TrustParams { lambda: 0.8, initial_score: 0.5, weights: BehaviorWeights::default() }
    }
}

impl TrustParams {
    pub fn validate(&self) -> Result<(), TrustError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(TrustError::OutOfRange { name: "lambda", value: self.lambda, range: "(0, 1)" });
        }
        unit("initial_score", self.initial_score)?;
        let w = self.weights;
        for (name, v) in [("weights.valid", w.valid), ("weights.timely", w.timely), ("weights.uptime", w.uptime)] {
            unit(name, v)?;
        }
        let sum = w.valid + w.timely + w.uptime;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TrustError::OutOfRange { name: "weights sum", value: sum, range: "{1}" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    /// ξ_i in [0, 1].
    pub score: f64,
    /// Simulation seconds of the last update.
    pub last_update: f64,
}

impl TrustState {
    pub fn initial(params: &TrustParams) -> Self {
        TrustState { score: params.initial_score, last_update: 0.0 }
    }
}

/// χ_i and the fractions it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorScore {
    pub value: f64,
    pub valid_fraction: f64,
    pub timely_fraction: f64,
    pub uptime_fraction: f64,
}

/// Neutral behavior assigned to UAVs with no transactions in a window.
pub const NEUTRAL_BEHAVIOR: f64 = 0.5;

/// Per-UAV counters over one consensus window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowStats {
    /// Transactions that reached an edge node.
    pub submitted: u64,
    /// Of those, admitted with a valid signature.
    pub valid: u64,
    /// Of those, delivered within τ_max of their submit time.
    pub timely: u64,
    pub beacons_sent: u64,
    pub beacons_delivered: u64,
}

pub fn behavior_score(stats: &WindowStats, weights: &BehaviorWeights) -> BehaviorScore {
    if stats.submitted == 0 {
        return BehaviorScore {
            value: NEUTRAL_BEHAVIOR,
            valid_fraction: NEUTRAL_BEHAVIOR,
            timely_fraction: NEUTRAL_BEHAVIOR,
            uptime_fraction: NEUTRAL_BEHAVIOR,
        };
    }
    let frac = |num: u64, den: u64| if den == 0 { 1.0 } else { (num.min(den)) as f64 / den as f64 };
    let valid_fraction = frac(stats.valid, stats.submitted);
    let timely_fraction = frac(stats.timely, stats.submitted);
    let uptime_fraction = frac(stats.beacons_delivered, stats.beacons_sent);
    let value = weights.valid * valid_fraction + weights.timely * timely_fraction + weights.uptime * uptime_fraction;
    BehaviorScore { value: value.clamp(0.0, 1.0), valid_fraction, timely_fraction, uptime_fraction }
}

/// ξ(t+1) = λ·ξ(t) + (1 − λ)·χ(t).
pub fn update_trust(
    state: &TrustState,
    behavior: &BehaviorScore,
    params: &TrustParams,
    now: f64,
) -> Result<TrustState, TrustError> {
    let xi = unit("score", state.score)?;
    let chi = unit("behavior", behavior.value)?;
    let lambda = params.lambda;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(TrustError::OutOfRange { name: "lambda", value: lambda, range: "(0, 1)" });
    }
    let score = lambda * xi + (1.0 - lambda) * chi;
    Ok(TrustState { score: score.clamp(0.0, 1.0), last_update: now })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRank {
    pub ranks: BTreeMap<NodeId, f64>,
    /// All scores were zero and a uniform distribution was substituted.
    pub degenerate: bool,
}

/// ρ_i = ξ_i / Σ_k ξ_k.
pub fn trust_rank(scores: &BTreeMap<NodeId, f64>) -> Result<TrustRank, TrustError> {
    if scores.is_empty() {
        return Err(TrustError::Empty);
    }
    for &v in scores.values() {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(TrustError::OutOfRange { name: "score", value: v, range: "[0, inf)" });
        }
    }
    let total: f64 = scores.values().sum();
    if total == 0.0 {
        let u = 1.0 / scores.len() as f64;
        return Ok(TrustRank { ranks: scores.keys().map(|&k| (k, u)).collect(), degenerate: true });
    }
    Ok(TrustRank { ranks: scores.iter().map(|(&k, &v)| (k, v / total)).collect(), degenerate: false })
}

/// ρ_j^edge: per-edge sums of associated UAV trust normalized by the global
/// sum. Edges with no UAVs get weight 0. If every associated UAV has zero
/// trust the weights fall back to uniform over edges.
pub fn edge_committee_weights(
    assignment: &BTreeMap<NodeId, Vec<NodeId>>,
    scores: &BTreeMap<NodeId, f64>,
) -> Result<BTreeMap<NodeId, f64>, TrustError> {
    if assignment.is_empty() {
        return Err(TrustError::EmptyAssignment);
    }
    let mut sums = BTreeMap::new();
    for (&edge, uavs) in assignment {
        let mut s = 0.0;
        for u in uavs {
            s += *scores.get(u).ok_or(TrustError::UnknownUav(*u))?;
        }
        sums.insert(edge, s);
    }
    let total: f64 = sums.values().sum();
    if total == 0.0 {
        let u = 1.0 / sums.len() as f64;
        return Ok(sums.keys().map(|&k| (k, u)).collect());
    }
    Ok(sums.into_iter().map(|(k, s)| (k, s / total)).collect())
}
