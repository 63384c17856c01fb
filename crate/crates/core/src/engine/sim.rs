use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::queue::EventQueue;
use super::records::{BlockRecord, MetricsRecord, RoundRecord, Summary, TrustRecord, TxRecord, WindowRecord};
use super::{EngineError, RunOutput};
use crate::config::{Behavior, ScenarioConfig};
use crate::consensus::{
    assemble_block, sample_committee, select_proposer, validate_block, AdmitOutcome, AssembleError, BlockLimits,
    CommitteeRound, Outcome, RejectReason, ValidationContext, ValidationPool, Vote,
};
use crate::crypto::{decaps, encaps, keygen, KeyPair, PublicKey};
use crate::ledger::{Block, BlockMetadata, LedgerSegment, Transaction};
use crate::netsim::{
    grid_positions, spawn, step_mobility, Area, CommGraph, EnergyAccount, EnergyModel, GaussMarkovParams, LinkModel,
    NodeKind, UavState, Vec3,
};
use crate::rng::{derive_u64, stream, Stream};
use crate::trust::{behavior_score, edge_committee_weights, trust_rank, update_trust, TrustParams, TrustState, WindowStats};
use crate::types::{Digest, Energy, NodeId, Timestamp};
use crate::workload::{assign_compromised, corrupt, next_arrival, pick_sender, CorruptionContext, PayloadGenerator};

/// Bytes of a committee vote message.
const VOTE_BYTES: usize = 128;
/// Committed transactions kept as replay material.
const REPLAY_POOL: usize = 1024;

enum Event {
    Mobility,
    Arrival,
    Beacon(usize),
    Received { edge: usize, tag: u64, tx: Box<Transaction> },
    Window,
    Block,
    Decide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    InFlight,
    Pooled,
    Committed,
    Expired,
    Rejected(RejectReason),
    Dropped,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::InFlight | Status::Pooled => "pending",
            Status::Committed => "committed",
            Status::Expired => "expired",
            Status::Rejected(_) => "rejected",
            Status::Dropped => "dropped",
        }
    }
}

struct Submission {
    uav: NodeId,
    tx_id: Digest,
    submit: Timestamp,
    edge: Option<NodeId>,
    recv: Option<Timestamp>,
    timely: Option<bool>,
    status: Status,
    placement: Option<(NodeId, u32, Timestamp)>,
    energy_j: f64,
}

struct Edge {
    id: NodeId,
    pool: ValidationPool,
    segment: LedgerSegment,
    energy: EnergyAccount,
    malicious: bool,
    /// The cell's shared uplink channel is busy until this time.
    uplink_free: Timestamp,
    kem: KeyPair,
    replicas: u64,
}

struct PendingRound {
    number: u32,
    block: Block,
    tags: Vec<u64>,
    round: CommitteeRound,
    reason: &'static str,
}

pub(super) struct Simulation {
    cfg: ScenarioConfig,
    queue: EventQueue<Event>,
    horizon: Timestamp,
    energy_model: EnergyModel,
    link: LinkModel,
    area: Area,
    gm: GaussMarkovParams,
    payloads: PayloadGenerator,
    trust_params: TrustParams,

    graph: CommGraph,
    uavs: Vec<UavState>,
    uav_energy: Vec<EnergyAccount>,
    uav_spent: Vec<Energy>,
    uav_keys: Vec<KeyPair>,
    registry: BTreeMap<NodeId, PublicKey>,
    assoc: Vec<Option<NodeId>>,
    edges: Vec<Edge>,

    trust: Vec<TrustState>,
    trust_sum: Vec<f64>,
    stats: Vec<WindowStats>,
    window: u32,
    committee: Vec<NodeId>,
    proposer: NodeId,
    compromised: BTreeMap<NodeId, Behavior>,

    rng_mobility: ChaCha12Rng,
    rng_workload: ChaCha12Rng,
    rng_committee: ChaCha12Rng,
    rng_network: ChaCha12Rng,
    rng_adversary: ChaCha12Rng,

    subs: Vec<Submission>,
    replay: Vec<Transaction>,
    committed_ids: HashSet<Digest>,
    pending: Option<PendingRound>,
    rounds_started: u32,
    kem_counter: u64,
    forged_committed: u64,

    w_submitted: u64,
    w_admitted: u64,
    w_rejected: u64,
    w_committed: u64,
    metrics: MetricsRecord,
    violation: Option<String>,
}

fn secs(t: Timestamp) -> f64 {
    t.as_secs()
}

fn after(t: Timestamp, dt_s: f64) -> Timestamp {
    Timestamp(t.0 + (dt_s * 1e6).round().max(0.0) as i64)
}

fn joined(ids: &[NodeId]) -> String {
    ids.iter().map(|n| n.0.to_string()).collect::<Vec<_>>().join(";")
}

impl Simulation {
    pub(super) fn new(cfg: &ScenarioConfig) -> Result<Self, EngineError> {
        let seed = cfg.seed;
        let n = cfg.network.uav_count as usize;
        let e = cfg.network.edge_count as usize;
        let side = cfg.network.side_m();
        let area = Area { side, altitude_min: cfg.network.altitude_min_m, altitude_max: cfg.network.altitude_max_m };
        let gm = GaussMarkovParams {
            memory: cfg.mobility.memory,
            mean_speed: cfg.mobility.mean_speed_mps,
            speed_sigma: cfg.mobility.speed_sigma_mps,
            heading_sigma: cfg.mobility.heading_sigma_rad,
        };
        let costs = cfg.crypto.costs.clone();
        let energy_model = EnergyModel {
            eps0: cfg.energy.eps0_j,
            eps1: cfg.energy.eps1_j_per_m2,
            sign: costs.sign,
            verify: costs.verify,
            kem: costs.kem,
        };
        let link = LinkModel {
            wireless_bps: cfg.network.uplink_bps,
            wired_bps: cfg.network.backhaul_bps,
            propagation_mps: cfg.network.propagation_mps,
            jitter_floor_s: cfg.network.jitter_floor_ms / 1e3,
            jitter_mean_s: cfg.network.jitter_mean_ms / 1e3,
        };

        let mut rng_mobility = stream(seed, Stream::Mobility);
        let mut rng_adversary = stream(seed, Stream::Adversary);
        let budget = Energy::from_joules(cfg.energy.budget_j);
        let uavs: Vec<UavState> =
            (0..n).map(|i| spawn(NodeId(i as u32), &area, &gm, budget, &mut rng_mobility)).collect();

        let sig = cfg.crypto.scheme.signature();
        let kem = cfg.crypto.scheme.kem();
        let mut uav_keys = Vec::with_capacity(n);
        let mut registry = BTreeMap::new();
        for i in 0..n {
            let kp = keygen(derive_u64(seed, "uav-signing-key", i as u64), sig)?;
            registry.insert(NodeId(i as u32), kp.public.clone());
            uav_keys.push(kp);
        }

        let edge_ids: Vec<NodeId> = (0..e).map(|j| NodeId((n + j) as u32)).collect();
        let malicious = assign_compromised(&edge_ids, cfg.adversary.edge_fraction, &[Behavior::VoteReject], &mut rng_adversary);
        let uav_ids: Vec<NodeId> = (0..n).map(|i| NodeId(i as u32)).collect();
        let uav_behaviors: Vec<Behavior> =
            cfg.adversary.behaviors.iter().copied().filter(|b| *b != Behavior::VoteReject).collect();
        let compromised = assign_compromised(&uav_ids, cfg.adversary.uav_fraction, &uav_behaviors, &mut rng_adversary);

        let genesis = BlockMetadata::genesis(seed);
        let max_payload = cfg.workload.payload_max_bytes as usize;
        let mut edges = Vec::with_capacity(e);
        for (j, id) in edge_ids.iter().enumerate() {
            edges.push(Edge {
                id: *id,
                pool: ValidationPool::new(*id, max_payload, cfg.consensus.tau_max_s),
                segment: LedgerSegment::new(*id, genesis.clone()),
                energy: EnergyAccount::mains(),
                malicious: malicious.contains_key(id),
                uplink_free: Timestamp::ZERO,
                kem: keygen(derive_u64(seed, "edge-kem-key", j as u64), kem)?,
                replicas: 0,
            });
        }

        let mut positions: Vec<Vec3> = uavs.iter().map(|u| u.position).collect();
        positions.extend(grid_positions(e, side, 0.0));
        positions.push(Vec3::new(side / 2.0, side / 2.0, 0.0));
        let mut kinds = vec![NodeKind::Uav; n];
        kinds.extend(std::iter::repeat_n(NodeKind::Edge, e));
        kinds.push(NodeKind::Base);
        let graph = CommGraph { alive: vec![true; positions.len()], positions, kinds, range_m: cfg.network.range_m };

        let trust_params = cfg.trust_params();
        let mut sim = Simulation {
            cfg: cfg.clone(),
            queue: EventQueue::default(),
            horizon: Timestamp::from_secs(cfg.duration_s),
            energy_model,
            link,
            area,
            gm,
            payloads: PayloadGenerator {
                min_bytes: cfg.workload.payload_min_bytes as usize,
                max_bytes: cfg.workload.payload_max_bytes as usize,
                entropy: cfg.workload.payload_entropy,
            },
            trust_params,
            graph,
            uav_energy: vec![EnergyAccount::battery(budget); n],
            uav_spent: vec![Energy::ZERO; n],
            uavs,
            uav_keys,
            registry,
            assoc: vec![None; n],
            edges,
            trust: vec![TrustState::initial(&trust_params); n],
            trust_sum: vec![0.0; n],
            stats: vec![WindowStats::default(); n],
            window: 0,
            committee: Vec::new(),
            proposer: edge_ids[0],
            compromised,
            rng_mobility,
            rng_workload: stream(seed, Stream::Workload),
            rng_committee: stream(seed, Stream::Committee),
            rng_network: stream(seed, Stream::Network),
            rng_adversary,
            subs: Vec::new(),
            replay: Vec::new(),
            committed_ids: HashSet::new(),
            pending: None,
            rounds_started: 0,
            kem_counter: 0,
            forged_committed: 0,
            w_submitted: 0,
            w_admitted: 0,
            w_rejected: 0,
            w_committed: 0,
            metrics: MetricsRecord::default(),
            violation: None,
        };
        sim.associate_all()?;
        sim.resample_committee()?;

        let q = &mut sim.queue;
        q.schedule(Timestamp::from_secs(cfg.mobility.step_s), Event::Mobility);
        let first = next_arrival(cfg.workload.arrival_rate, &mut sim.rng_workload);
        q.schedule(Timestamp::from_secs(first), Event::Arrival);
        for i in 0..n {
            let phase = sim.rng_network.random_range(0.0..cfg.workload.beacon_interval_s);
            q.schedule(Timestamp::from_secs(phase), Event::Beacon(i));
        }
        q.schedule(Timestamp::from_secs(cfg.consensus.window_s), Event::Window);
        q.schedule(Timestamp::from_secs(cfg.consensus.block_interval_s), Event::Block);
        Ok(sim)
    }

    pub(super) fn run(mut self) -> Result<RunOutput, EngineError> {
        while let Some((_, ev)) = self.queue.pop_until(self.horizon) {
            match ev {
                Event::Mobility => self.on_mobility()?,
                Event::Arrival => self.on_arrival()?,
                Event::Beacon(i) => self.on_beacon(i),
                Event::Received { edge, tag, tx } => self.on_received(edge, tag, *tx),
                Event::Window => self.on_window()?,
                Event::Block => self.on_block(),
                Event::Decide => self.on_decide(),
            }
            if let Some(v) = self.violation.take() {
                return Err(EngineError::Invariant(v));
            }
        }
        self.finish()
    }

    fn edge_index(&self, id: NodeId) -> usize {
        id.index() - self.uavs.len()
    }

    fn charge_uav(&mut self, i: usize, joules: f64) -> f64 {
        let cost = Energy::from_joules(joules);
        let taken = self.uav_energy[i].charge(cost);
        self.uav_spent[i] += taken;
        self.uavs[i].energy = self.uav_energy[i].remaining();
        if self.uav_energy[i].depleted() {
            self.uavs[i].alive = false;
            self.graph.alive[i] = false;
            self.assoc[i] = None;
        }
        taken.as_joules()
    }

    fn charge_edge(&mut self, j: usize, joules: f64) {
        self.edges[j].energy.charge(Energy::from_joules(joules));
    }

    fn associate_all(&mut self) -> Result<(), EngineError> {
        for i in 0..self.uavs.len() {
            if !self.uavs[i].alive {
                continue;
            }
            let nearest = self.graph.nearest_edge(NodeId(i as u32)).map(|(e, _)| e);
            if nearest != self.assoc[i] {
                self.assoc[i] = nearest;
                if let Some(e) = nearest {
                    self.key_exchange(i, e)?;
                }
            }
        }
        Ok(())
    }

    /// Session key establishment with a newly associated edge.
    fn key_exchange(&mut self, i: usize, edge: NodeId) -> Result<(), EngineError> {
        let j = self.edge_index(edge);
        self.kem_counter += 1;
        let r = derive_u64(self.cfg.seed, "kem-encaps", self.kem_counter);
        let (ct, ss) = encaps(&self.edges[j].kem.public, r)?;
        let ss2 = decaps(&self.edges[j].kem.private, &ct)?;
        if ss != ss2 {
            self.violation = Some(format!("key exchange between {i} and {edge} disagreed"));
        }
        let d = self.graph.distance(NodeId(i as u32), edge);
        let c = self.energy_model.kem.joules + self.energy_model.tx_energy(d);
        self.charge_uav(i, c);
        self.charge_edge(j, self.energy_model.kem.joules);
        Ok(())
    }

    fn on_mobility(&mut self) -> Result<(), EngineError> {
        let dt = self.cfg.mobility.step_s;
        for i in 0..self.uavs.len() {
            if self.uavs[i].alive {
                self.uavs[i] = step_mobility(&self.uavs[i], dt, &self.gm, &self.area, &mut self.rng_mobility);
                self.graph.positions[i] = self.uavs[i].position;
            }
        }
        self.associate_all()?;
        let next = after(self.queue.now(), dt);
        self.queue.schedule(next, Event::Mobility);
        Ok(())
    }

    /// Reserve the cell's shared uplink; returns the arrival time.
    fn uplink(&mut self, i: usize, edge: NodeId, bytes: usize, ready: Timestamp) -> Timestamp {
        let j = self.edge_index(edge);
        let start = ready.max(self.edges[j].uplink_free);
        let done = after(start, self.link.serialization(bytes, false));
        self.edges[j].uplink_free = done;
        let d = self.graph.distance(NodeId(i as u32), edge);
        let jitter = self.link.jitter(&mut self.rng_network);
        after(done, d / self.link.propagation_mps + jitter)
    }

    fn on_arrival(&mut self) -> Result<(), EngineError> {
        let now = self.queue.now();
        let next = next_arrival(self.cfg.workload.arrival_rate, &mut self.rng_workload);
        self.queue.schedule(after(now, next), Event::Arrival);

        let alive: Vec<NodeId> = self.uavs.iter().filter(|u| u.alive).map(|u| u.id).collect();
        let Some(sender) = pick_sender(&alive, &mut self.rng_workload) else {
            return Ok(());
        };
        let i = sender.index();
        let payload = self.payloads.generate(sender, secs(now), &mut self.rng_workload);
        let mut tx = Transaction::signed(sender, now, payload, &self.uav_keys[i].private)?;
        if let Some(&b) = self.compromised.get(&sender) {
            let ctx = CorruptionContext {
                key: &self.uav_keys[i].private,
                committed: &self.replay,
                tau_max: self.cfg.consensus.tau_max_s,
            };
            tx = corrupt(tx, b, &ctx, &mut self.rng_adversary);
        }
        let tag = self.subs.len() as u64;
        let mut energy = self.charge_uav(i, self.energy_model.sign.joules);
        let mut sub = Submission {
            uav: sender,
            tx_id: tx.id,
            submit: tx.submit_time,
            edge: None,
            recv: None,
            timely: None,
            status: Status::Dropped,
            placement: None,
            energy_j: 0.0,
        };
        if let Some(edge) = self.assoc[i] {
            let d = self.graph.distance(sender, edge);
            energy += self.charge_uav(i, self.energy_model.tx_energy(d));
            let ready = after(now, self.energy_model.sign.millis / 1e3);
            let at = self.uplink(i, edge, tx.wire_len(), ready);
            sub.edge = Some(edge);
            sub.status = Status::InFlight;
            self.queue.schedule(at, Event::Received { edge: self.edge_index(edge), tag, tx: Box::new(tx) });
        }
        sub.energy_j = energy;
        self.subs.push(sub);
        Ok(())
    }

    fn on_beacon(&mut self, i: usize) {
        if !self.uavs[i].alive {
            return;
        }
        let now = self.queue.now();
        self.stats[i].beacons_sent += 1;
        if let Some(edge) = self.assoc[i] {
            let d = self.graph.distance(NodeId(i as u32), edge);
            self.charge_uav(i, self.energy_model.tx_energy(d));
            self.uplink(i, edge, self.cfg.workload.beacon_bytes as usize, now);
            self.stats[i].beacons_delivered += 1;
        }
        if self.uavs[i].alive {
            self.queue.schedule(after(now, self.cfg.workload.beacon_interval_s), Event::Beacon(i));
        }
    }

    fn on_received(&mut self, j: usize, tag: u64, tx: Transaction) {
        let now = self.queue.now();
        let uav = self.subs[tag as usize].uav.index();
        self.stats[uav].submitted += 1;
        self.w_submitted += 1;
        let verify = self.energy_model.verify.joules;
        self.charge_edge(j, verify);
        let outcome = self.edges[j].pool.admit(tx, &self.registry, now, tag);
        let sub = &mut self.subs[tag as usize];
        sub.energy_j += verify;
        sub.recv = Some(now);
        match outcome {
            AdmitOutcome::Accepted { timely } => {
                sub.status = Status::Pooled;
                sub.timely = Some(timely);
                self.stats[uav].valid += 1;
                if timely {
                    self.stats[uav].timely += 1;
                }
                self.w_admitted += 1;
            }
            AdmitOutcome::Rejected(r) => {
                sub.status = Status::Rejected(r);
                self.w_rejected += 1;
            }
        }
    }

    fn resample_committee(&mut self) -> Result<(), EngineError> {
        let mut assignment: BTreeMap<NodeId, Vec<NodeId>> = self.edges.iter().map(|e| (e.id, Vec::new())).collect();
        for (i, a) in self.assoc.iter().enumerate() {
            if let Some(e) = a {
                assignment.get_mut(e).expect("edge exists").push(NodeId(i as u32));
            }
        }
        let scores: BTreeMap<NodeId, f64> =
            self.trust.iter().enumerate().map(|(i, t)| (NodeId(i as u32), t.score)).collect();
        let weights = edge_committee_weights(&assignment, &scores)?;
        let m = self.cfg.consensus.committee_size as usize;
        self.committee = sample_committee(&weights, m, &mut self.rng_committee)?;
        self.proposer = select_proposer(&self.committee, &weights).expect("committee is non-empty");
        Ok(())
    }

    fn on_window(&mut self) -> Result<(), EngineError> {
        let now = self.queue.now();
        self.window += 1;
        let weights = self.trust_params.weights;
        let mut behaviors = Vec::with_capacity(self.uavs.len());
        for i in 0..self.uavs.len() {
            let chi = behavior_score(&self.stats[i], &weights);
            self.trust[i] = update_trust(&self.trust[i], &chi, &self.trust_params, secs(now))?;
            self.trust_sum[i] += self.trust[i].score;
            self.stats[i] = WindowStats::default();
            behaviors.push(chi.value);
        }
        let scores: BTreeMap<NodeId, f64> =
            self.trust.iter().enumerate().map(|(i, t)| (NodeId(i as u32), t.score)).collect();
        let rank = trust_rank(&scores)?;
        for (i, (id, score)) in scores.iter().enumerate() {
            self.metrics.trust.push(TrustRecord {
                window: self.window,
                uav: id.0,
                score: *score,
                rank: rank.ranks[id],
                behavior: behaviors[i],
            });
        }
        self.resample_committee()?;
        let received = self.w_admitted + self.w_rejected;
        let window_s = self.cfg.consensus.window_s;
        self.metrics.windows.push(WindowRecord {
            window: self.window,
            t_end_s: secs(now),
            submitted: self.w_submitted,
            admitted: self.w_admitted,
            rejected: self.w_rejected,
            committed: self.w_committed,
            tps: self.w_committed as f64 / window_s,
            validation_success: if received == 0 { 100.0 } else { 100.0 * self.w_admitted as f64 / received as f64 },
            committee: joined(&self.committee),
            proposer: self.proposer.0,
            mean_trust: scores.values().sum::<f64>() / scores.len() as f64,
            degenerate: rank.degenerate,
        });
        self.w_submitted = 0;
        self.w_admitted = 0;
        self.w_rejected = 0;
        self.w_committed = 0;
        self.queue.schedule(after(now, window_s), Event::Window);
        Ok(())
    }

    fn skipped_round(&mut self, at: Timestamp, outcome: &'static str) {
        self.metrics.rounds.push(RoundRecord {
            round: self.rounds_started,
            window: self.window,
            t_propose_s: secs(at),
            committee: joined(&self.committee),
            proposer: self.proposer.0,
            eta: 0,
            zeta: 0.0,
            theta_j: 0.0,
            utility: 0.0,
            approvals: 0,
            quorum: self.cfg.consensus.quorum_threshold(),
            outcome,
            delta_cons_s: 0.0,
            reason: "",
        });
    }

    fn wired_delay(&mut self, a: NodeId, b: NodeId, bytes: usize) -> f64 {
        self.graph.distance(a, b) / self.link.propagation_mps
            + self.link.serialization(bytes, true)
            + self.link.jitter(&mut self.rng_network)
    }

    fn on_block(&mut self) {
        let now = self.queue.now();
        self.queue.schedule(after(now, self.cfg.consensus.block_interval_s), Event::Block);
        if self.pending.is_some() {
            self.skipped_round(now, "busy");
            return;
        }
        let p = self.edge_index(self.proposer);
        let cutoff = Timestamp::from_secs(secs(now) - self.cfg.consensus.tx_expiry_s);
        for j in 0..self.edges.len() {
            for e in self.edges[j].pool.expire(cutoff) {
                self.subs[e.tag as usize].status = Status::Expired;
            }
        }

        // Every other edge hands its validated pool to the proposer.
        let verify = self.energy_model.verify;
        let mut ready = 0.0f64;
        let mut reverified = 0usize;
        for j in 0..self.edges.len() {
            if j == p || self.edges[j].pool.is_empty() {
                continue;
            }
            let batch = self.edges[j].pool.drain();
            let bytes: usize = batch.iter().map(|e| e.tx.wire_len()).sum();
            let (src, dst) = (self.edges[j].id, self.proposer);
            ready = ready.max(self.wired_delay(src, dst, bytes));
            let send = self.energy_model.tx_energy(self.graph.distance(src, dst));
            self.charge_edge(j, send);
            self.charge_edge(p, verify.joules * batch.len() as f64);
            let share = send / batch.len() as f64;
            reverified += batch.len();
            for e in batch {
                self.subs[e.tag as usize].energy_j += share + verify.joules;
                self.edges[p].pool.insert_verified(e);
            }
        }
        let t_propose = after(now, ready + reverified as f64 * verify.millis / 1e3);

        let members: Vec<NodeId> = self.committee.iter().copied().filter(|m| *m != self.proposer).collect();
        let model = self.energy_model;
        let links: f64 = members
            .iter()
            .map(|m| 2.0 * model.tx_energy(self.graph.distance(self.proposer, *m)))
            .sum();
        let others = members.len() as f64;
        let theta = move |k: usize| links + others * k as f64 * model.verify.joules;
        let limits = BlockLimits {
            max_block_bytes: self.cfg.ledger.max_block_bytes,
            max_txs: usize::MAX,
            codec: self.cfg.ledger.codec,
            tau_max: self.cfg.consensus.tau_max_s,
        };
        self.rounds_started += 1;
        let edge = &self.edges[p];
        let assembled = assemble_block(
            &edge.pool,
            &self.cfg.consensus.utility(),
            &limits,
            edge.segment.tip().block_id,
            self.proposer,
            t_propose,
            &theta,
        );
        let assembled = match assembled {
            Ok(a) => a,
            Err(AssembleError::EmptyPool) => {
                self.skipped_round(t_propose, "no-proposal");
                return;
            }
            Err(e) => {
                self.violation = Some(format!("block assembly failed: {e}"));
                return;
            }
        };

        let block = assembled.block;
        let ctx = ValidationContext {
            segment: &self.edges[p].segment,
            registry: &self.registry,
            max_block_bytes: self.cfg.ledger.max_block_bytes,
            codec: self.cfg.ledger.codec,
            utility: self.cfg.consensus.utility(),
            tau_max: self.cfg.consensus.tau_max_s,
        };
        // Validation is a pure function of the block and the shared chain view,
        // so each honest member reaches the same verdict.
        let verdict = validate_block(&block, &ctx);
        let eta = block.transactions.len();
        let mut round = CommitteeRound::new(self.proposer, self.committee.clone(), t_propose);
        let own = verdict.is_ok() && !self.edges[p].malicious;
        round.record_vote(Vote { member: self.proposer, approve: own, at: t_propose });
        let mut decide_at = t_propose;
        for m in members {
            let mj = self.edge_index(m);
            let recv = self.wired_delay(self.proposer, m, block.compressed_size as usize);
            let confirm = after(t_propose, recv + eta as f64 * verify.millis / 1e3);
            let back = self.wired_delay(m, self.proposer, VOTE_BYTES);
            decide_at = decide_at.max(after(confirm, back));
            let d = self.graph.distance(self.proposer, m);
            self.charge_edge(p, model.tx_energy(d));
            self.charge_edge(mj, model.tx_energy(d) + eta as f64 * verify.joules);
            let approve = !self.edges[mj].malicious && verdict.is_ok();
            round.record_vote(Vote { member: m, approve, at: confirm });
        }
        let reason = match &verdict {
            Ok(()) => "",
            Err(e) => e.code(),
        };
        self.pending = Some(PendingRound { number: self.rounds_started, block, tags: assembled.tags, round, reason });
        self.queue.schedule(decide_at, Event::Decide);
    }

    fn on_decide(&mut self) {
        let now = self.queue.now();
        let Some(pr) = self.pending.take() else {
            return;
        };
        let quorum = self.cfg.consensus.quorum_threshold();
        let outcome = pr.round.decide(quorum as usize);
        let s = pr.block.score;
        self.metrics.rounds.push(RoundRecord {
            round: pr.number,
            window: self.window,
            t_propose_s: secs(pr.round.proposed_at),
            committee: joined(&pr.round.members),
            proposer: pr.round.proposer.0,
            eta: s.valid_count,
            zeta: s.freshness,
            theta_j: s.energy_cost,
            utility: s.utility,
            approvals: pr.round.approvals() as u32,
            quorum,
            outcome: outcome.name(),
            delta_cons_s: pr.round.consensus_delay(),
            reason: pr.reason,
        });
        if outcome == Outcome::Abort {
            return;
        }
        let p = self.edge_index(pr.round.proposer);
        let block = pr.block;
        for tx in &block.transactions {
            if !self.committed_ids.insert(tx.id) {
                self.violation = Some(format!("transaction {} committed twice", tx.id.short()));
                return;
            }
            if !self.registry.get(&tx.sender).is_some_and(|k| tx.verify(k)) {
                self.forged_committed += 1;
            }
        }
        let max = self.cfg.ledger.max_block_bytes;
        let height = self.edges[p].segment.height() as u32 + 1;
        self.metrics.blocks.push(BlockRecord {
            segment: pr.round.proposer.0,
            height,
            block_id: block.metadata.block_id.to_hex(),
            timestamp_s: secs(block.metadata.timestamp),
            txs: block.transactions.len() as u32,
            raw_bytes: block.raw_size,
            compressed_bytes: block.compressed_size,
            omega_c: block.compression_ratio(),
            eta: s.valid_count,
            zeta: s.freshness,
            theta_j: s.energy_cost,
            utility: s.utility,
        });

        // Replicate to the next edges by id.
        let e = self.edges.len();
        for r in 1..=self.cfg.ledger.replication as usize {
            let target = (p + r) % e;
            let d = self.graph.distance(pr.round.proposer, self.edges[target].id);
            self.charge_edge(p, self.energy_model.tx_energy(d));
            self.edges[target].replicas += 1;
        }

        let ids: Vec<Digest> = block.transactions.iter().map(|t| t.id).collect();
        let per_tx = s.energy_cost / s.valid_count.max(1) as f64;
        for tx in &block.transactions {
            self.replay.push(tx.clone());
        }
        if self.replay.len() > REPLAY_POOL {
            let extra = self.replay.len() - REPLAY_POOL;
            self.replay.drain(..extra);
        }
        if let Err(err) = self.edges[p].segment.append_block(block, max) {
            self.violation = Some(format!("committed block rejected by its segment: {err}"));
            return;
        }
        let mut placed = 0usize;
        for j in 0..e {
            for entry in self.edges[j].pool.mark_committed(&ids) {
                let sub = &mut self.subs[entry.tag as usize];
                if j == p {
                    sub.status = Status::Committed;
                    sub.placement = Some((pr.round.proposer, height, now));
                    sub.energy_j += per_tx;
                    placed += 1;
                } else {
                    sub.status = Status::Rejected(RejectReason::Duplicate);
                }
            }
        }
        if placed != pr.tags.len() {
            self.violation = Some(format!("block of {} transactions committed {placed} pool entries", pr.tags.len()));
            return;
        }
        self.w_committed += placed as u64;
    }

    fn finish(self) -> Result<RunOutput, EngineError> {
        let mut counts = BTreeMap::<&'static str, u64>::new();
        let mut in_flight = 0u64;
        let mut pooled = 0u64;
        for s in &self.subs {
            *counts.entry(s.status.name()).or_insert(0) += 1;
            match s.status {
                Status::InFlight => in_flight += 1,
                Status::Pooled => pooled += 1,
                _ => {}
            }
        }
        let get = |k: &str| counts.get(k).copied().unwrap_or(0);
        let (committed, pending, expired, rejected, dropped) =
            (get("committed"), get("pending"), get("expired"), get("rejected"), get("dropped"));
        let submitted = self.subs.len() as u64;
        let check = |ok: bool, what: String| if ok { Ok(()) } else { Err(EngineError::Invariant(what)) };
        check(
            submitted == committed + pending + expired + rejected + dropped,
            format!("reconciliation: {submitted} != {committed}+{pending}+{expired}+{rejected}+{dropped}"),
        )?;
        let pool_total: u64 = self.edges.iter().map(|e| e.pool.len() as u64).sum();
        check(pooled == pool_total, format!("{pooled} pooled submissions but pools hold {pool_total}"))?;
        let queued_rx = self.queue.pending().filter(|e| matches!(e, Event::Received { .. })).count() as u64;
        check(in_flight == queued_rx, format!("{in_flight} submissions in flight, {queued_rx} deliveries queued"))?;
        let seg_total: u64 = self.edges.iter().map(|e| e.segment.tx_count() as u64).sum();
        check(seg_total == committed, format!("segments hold {seg_total} transactions, {committed} committed"))?;
        check(self.forged_committed == 0, format!("{} invalid transactions committed", self.forged_committed))?;
        for (i, acct) in self.uav_energy.iter().enumerate() {
            let ok = acct.charged == self.uav_spent[i]
                && acct.initial.saturating_sub(self.uav_spent[i]) == acct.remaining()
                && acct.remaining() == self.uavs[i].energy;
            check(ok, format!("energy accounting of UAV {i} does not balance"))?;
        }

        let admitted: Vec<&Submission> = self.subs.iter().filter(|s| s.timely.is_some()).collect();
        let latencies: Vec<f64> =
            admitted.iter().map(|s| secs(s.recv.expect("received")) - secs(s.submit)).collect();
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let timely = admitted.iter().filter(|s| s.timely == Some(true)).count();

        let decided: Vec<&RoundRecord> =
            self.metrics.rounds.iter().filter(|r| r.outcome == "commit" || r.outcome == "abort").collect();
        let commits: Vec<f64> =
            decided.iter().filter(|r| r.outcome == "commit").map(|r| r.delta_cons_s).collect();
        let omegas: Vec<f64> = self.metrics.blocks.iter().map(|b| b.omega_c).collect();
        let tx_energy: Vec<f64> =
            self.subs.iter().filter(|s| s.status == Status::Committed).map(|s| s.energy_j).collect();
        let resolved = committed + expired + rejected + dropped;

        // Top decile of UAVs by mean trust over all windows; ties by lowest id.
        let n = self.uavs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.trust_sum[b].total_cmp(&self.trust_sum[a]).then(a.cmp(&b)));
        let top: HashSet<usize> = order.into_iter().take(n.div_ceil(10)).collect();
        let top_committed = self
            .subs
            .iter()
            .filter(|s| s.status == Status::Committed && top.contains(&s.uav.index()))
            .count();

        let duration = self.cfg.duration_s;
        let summary = Summary {
            seed: self.cfg.seed,
            duration_s: duration,
            submitted,
            committed,
            pending,
            expired,
            rejected,
            dropped,
            tps: if duration > 0.0 { committed as f64 / duration } else { 0.0 },
            mean_latency_s: mean(&latencies),
            timely_fraction: if admitted.is_empty() { 0.0 } else { timely as f64 / admitted.len() as f64 },
            mean_delta_cons_s: mean(&commits),
            rounds: decided.len() as u64,
            rounds_committed: commits.len() as u64,
            validation_success_pct: if decided.is_empty() {
                0.0
            } else {
                100.0 * commits.len() as f64 / decided.len() as f64
            },
            consensus_success_pct: if resolved == 0 { 0.0 } else { 100.0 * committed as f64 / resolved as f64 },
            mean_omega_c: mean(&omegas),
            energy_per_tx_j: mean(&tx_energy),
            top_decile_share: if committed == 0 { 0.0 } else { top_committed as f64 / committed as f64 },
            uav_energy_used_j: self.uav_spent.iter().map(|e| e.as_joules()).sum(),
            dead_uavs: self.uavs.iter().filter(|u| !u.alive).count() as u64,
        };

        let mut metrics = self.metrics;
        metrics.txs = self
            .subs
            .iter()
            .enumerate()
            .map(|(tag, s)| TxRecord {
                tag: tag as u64,
                uav: s.uav.0,
                tx_id: s.tx_id.to_hex(),
                submit_s: secs(s.submit),
                edge: s.edge.map(|e| e.0),
                recv_s: s.recv.map(secs),
                latency_s: s.recv.map(|r| secs(r) - secs(s.submit)),
                timely: s.timely,
                status: s.status.name(),
                reason: match s.status {
                    Status::Rejected(r) => r.name(),
                    _ => "",
                },
                segment: s.placement.map(|p| p.0 .0),
                height: s.placement.map(|p| p.1),
                commit_s: s.placement.map(|p| secs(p.2)),
                energy_j: s.energy_j,
            })
            .collect();

        Ok(RunOutput {
            config: self.cfg,
            summary,
            metrics,
            segments: self.edges.iter().map(|e| e.segment.clone()).collect(),
            registry: self.registry,
            compromised: self.compromised,
            malicious_edges: self.edges.iter().filter(|e| e.malicious).map(|e| e.id).collect(),
            edge_energy_j: self.edges.iter().map(|e| (e.id, e.energy.charged.as_joules())).collect(),
        })
    }
}
