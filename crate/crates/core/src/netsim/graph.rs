use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::mobility::Vec3;
use crate::types::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Uav,
    Edge,
    Base,
}

impl NodeKind {
    pub fn is_infrastructure(self) -> bool {
        !matches!(self, NodeKind::Uav)
    }
}

/// G(t) = (V, L(t)) at one instant.
///
/// Wireless links (any link with a UAV endpoint) exist iff both endpoints are
/// alive and within range. Edge nodes and the base station share an
/// always-on wired backhaul.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub positions: Vec<Vec3>,
    pub kinds: Vec<NodeKind>,
    pub alive: Vec<bool>,
    pub range_m: f64,
}

impl CommGraph {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.positions[a.index()].distance(&self.positions[b.index()])
    }

    pub fn is_wired(&self, a: NodeId, b: NodeId) -> bool {
        self.kinds[a.index()].is_infrastructure() && self.kinds[b.index()].is_infrastructure()
    }

    pub fn has_link(&self, a: NodeId, b: NodeId) -> bool {
        if a == b || !self.alive[a.index()] || !self.alive[b.index()] {
            return false;
        }
        self.is_wired(a, b) || self.distance(a, b) <= self.range_m
    }

    /// All directed links, ordered by (source, destination).
    pub fn links(&self) -> Vec<(NodeId, NodeId)> {
        let n = self.len() as u32;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.has_link(NodeId(i), NodeId(j)) {
                    out.push((NodeId(i), NodeId(j)));
                }
            }
        }
        out
    }

    /// Closest edge node reachable from `node`, ties by lowest id.
    pub fn nearest_edge(&self, node: NodeId) -> Option<(NodeId, f64)> {
        let mut best: Option<(NodeId, f64)> = None;
        for (j, kind) in self.kinds.iter().enumerate() {
            let e = NodeId(j as u32);
            if *kind != NodeKind::Edge || !self.has_link(node, e) {
                continue;
            }
            let d = self.distance(node, e);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((e, d));
            }
        }
        best
    }
}

/// Per-message delay parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub wireless_bps: f64,
    pub wired_bps: f64,
    pub propagation_mps: f64,
    pub jitter_floor_s: f64,
    pub jitter_mean_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delay {
    pub propagation: f64,
    pub serialization: f64,
    /// Floor plus the exponential queueing draw.
    pub jitter: f64,
}

impl Delay {
    pub fn total(&self) -> f64 {
        self.propagation + self.serialization + self.jitter
    }
}

impl LinkModel {
    pub fn serialization(&self, bytes: usize, wired: bool) -> f64 {
        let bps = if wired { self.wired_bps } else { self.wireless_bps };
        bytes as f64 * 8.0 / bps
    }

    pub fn jitter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let extra = if self.jitter_mean_s > 0.0 {
            Exp::new(1.0 / self.jitter_mean_s).expect("positive rate").sample(rng)
        } else {
            0.0
        };
        self.jitter_floor_s + extra
    }

    /// Closed-form mean of the delay for one message.
    pub fn mean_delay(&self, bytes: usize, distance_m: f64, wired: bool) -> f64 {
        distance_m / self.propagation_mps + self.serialization(bytes, wired) + self.jitter_floor_s + self.jitter_mean_s
    }
}

/// Delay for `bytes` from `src` to `dst`, or `None` when there is no link.
pub fn deliver<R: Rng + ?Sized>(
    bytes: usize,
    src: NodeId,
    dst: NodeId,
    graph: &CommGraph,
    model: &LinkModel,
    rng: &mut R,
) -> Option<Delay> {
    if !graph.has_link(src, dst) {
        return None;
    }
    let wired = graph.is_wired(src, dst);
    Some(Delay {
        propagation: graph.distance(src, dst) / model.propagation_mps,
        serialization: model.serialization(bytes, wired),
        jitter: model.jitter(rng),
    })
}

/// Evenly spread `n` edge sites over a square of side `side`: rows as close
/// to √n as possible, the remainder distributed one per row from the top.
pub fn grid_positions(n: usize, side: f64, z: f64) -> Vec<Vec3> {
    if n == 0 {
        return Vec::new();
    }
    let rows = ((n as f64).sqrt().round() as usize).clamp(1, n);
    let base = n / rows;
    let extra = n % rows;
    let mut out = Vec::with_capacity(n);
    for r in 0..rows {
        let cols = base + usize::from(r < extra);
        let y = (r as f64 + 0.5) * side / rows as f64;
        for c in 0..cols {
            let x = (c as f64 + 0.5) * side / cols as f64;
            out.push(Vec3::new(x, y, z));
        }
    }
    out
}
