//! Scenario configuration.
//!
//! Files are TOML with dotted keys (`trust.lambda = 0.8`). Every section
//! rejects unknown keys and omitted keys take the defaults below, which
//! reproduce the reference scenario.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{OpCost, Suite};
use crate::ledger::{Codec, UtilityParams};
use crate::trust::{BehaviorWeights, TrustParams};

/// The bundled reference scenario.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/default.scenario");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub uav_count: u32,
    pub edge_count: u32,
    /// Square deployment area in km².
    pub area_km2: f64,
    /// Wireless transmission range in meters.
    pub range_m: f64,
    pub altitude_min_m: f64,
    pub altitude_max_m: f64,
    /// UAV-to-edge wireless bandwidth, bits per second.
    pub uplink_bps: f64,
    /// Edge-to-edge and edge-to-base wired bandwidth, bits per second.
    pub backhaul_bps: f64,
    pub propagation_mps: f64,
    /// Minimum per-message delay in milliseconds.
    pub jitter_floor_ms: f64,
    /// Mean of the exponential queueing jitter in milliseconds.
    pub jitter_mean_ms: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            uav_count: 100,
            edge_count: 10,
            area_km2: 10.0,
            range_m: 1200.0,
            altitude_min_m: 50.0,
            altitude_max_m: 150.0,
            uplink_bps: 1e6,
            backhaul_bps: 1e8,
            propagation_mps: 299_792_458.0,
            jitter_floor_ms: 0.5,
            jitter_mean_ms: 5.0,
        }
    }
}

impl NetworkConfig {
    pub fn side_m(&self) -> f64 {
        (self.area_km2 * 1e6).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    /// Gauss-Markov memory η in [0, 1].
    pub memory: f64,
    pub mean_speed_mps: f64,
    pub speed_sigma_mps: f64,
    pub heading_sigma_rad: f64,
    /// Mobility integration step in seconds.
    pub step_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig { memory: 0.75, mean_speed_mps: 12.0, speed_sigma_mps: 2.0, heading_sigma_rad: 0.4, step_s: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub budget_j: f64,
    /// Fixed per-transmission cost ε₀ in joules.
    pub eps0_j: f64,
    /// Distance coefficient ε₁ in J/m².
    pub eps1_j_per_m2: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { budget_j: 1000.0, eps0_j: 0.05, eps1_j_per_m2: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CryptoCosts {
    pub sign: OpCost,
    pub verify: OpCost,
    pub kem: OpCost,
}

impl Default for CryptoCosts {
    fn default() -> Self {
        CryptoCosts {
            sign: OpCost { joules: 0.02, millis: 0.3 },
            verify: OpCost { joules: 0.01, millis: 0.1 },
            kem: OpCost { joules: 0.01, millis: 0.1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CryptoConfig {
    pub scheme: Suite,
    /// Recorded for reproducibility; only `sha-256` is implemented.
    pub hash: String,
    pub costs: CryptoCosts,
}

impl Default for CryptoConfig {
    fn default() -> Self {
        CryptoConfig { scheme: Suite::Mock, hash: crate::crypto::HASH_PRIMITIVE.to_string(), costs: CryptoCosts::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerConfig {
    /// Upper bound on a block's compressed wire size.
    pub max_block_bytes: u64,
    pub codec: Codec,
    /// Extra edges receiving a copy of each committed block.
    pub replication: u32,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig { max_block_bytes: 2_000_000, codec: Codec::Deflate, replication: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusConfig {
    pub window_s: f64,
    pub block_interval_s: f64,
    pub committee_size: u32,
    /// Approvals needed to commit; 0 selects ⌈2m/3⌉.
    pub quorum: u32,
    /// Timeliness bound τ_max in seconds.
    pub tau_max_s: f64,
    /// Pooled transactions older than this are dropped as expired.
    pub tx_expiry_s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            window_s: 10.0,
            block_interval_s: 15.0,
            committee_size: 5,
            quorum: 0,
            tau_max_s: 60.0,
            tx_expiry_s: 120.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl ConsensusConfig {
    pub fn quorum_threshold(&self) -> u32 {
        if self.quorum > 0 {
            self.quorum
        } else {
            quorum_for(self.committee_size)
        }
    }

    pub fn utility(&self) -> UtilityParams {
        UtilityParams { alpha: self.alpha, beta: self.beta, gamma: self.gamma }
    }
}

/// ⌈2m/3⌉ in integer arithmetic.
pub fn quorum_for(m: u32) -> u32 {
    (2 * m).div_ceil(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustConfig {
    pub lambda: f64,
    pub initial_score: f64,
    pub weight_valid: f64,
    pub weight_timely: f64,
    pub weight_uptime: f64,
}

impl Default for TrustConfig {
    fn default() -> Self {
        let p = TrustParams::default();
        TrustConfig {
            lambda: p.lambda,
            initial_score: p.initial_score,
            weight_valid: p.weights.valid,
            weight_timely: p.weights.timely,
            weight_uptime: p.weights.uptime,
        }
    }
}

impl TrustConfig {
    pub fn params(&self) -> TrustParams {
        TrustParams {
            lambda: self.lambda,
            initial_score: self.initial_score,
            weights: BehaviorWeights { valid: self.weight_valid, timely: self.weight_timely, uptime: self.weight_uptime },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Network-wide Poisson arrival rate, transactions per second.
    pub arrival_rate: f64,
    pub payload_min_bytes: u32,
    pub payload_max_bytes: u32,
    /// Fraction of each payload filled with incompressible bytes.
    pub payload_entropy: f64,
    pub beacon_interval_s: f64,
    pub beacon_bytes: u32,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            arrival_rate: 10.0,
            payload_min_bytes: 512,
            payload_max_bytes: 2048,
            payload_entropy: 0.42,
            beacon_interval_s: 1.0,
            beacon_bytes: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    ForgeSignature,
    Replay,
    DelayInjection,
    VoteReject,
}

impl Behavior {
    pub fn name(self) -> &'static str {
        match self {
            Behavior::ForgeSignature => "forge-signature",
            Behavior::Replay => "replay",
            Behavior::DelayInjection => "delay-injection",
            Behavior::VoteReject => "vote-reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryConfig {
    /// Fraction of UAVs compromised at start, in [0, 1).
    pub uav_fraction: f64,
    /// Fraction of edge nodes that vote reject on every proposal.
    pub edge_fraction: f64,
    /// Behaviors assigned round-robin to compromised UAVs.
    pub behaviors: Vec<Behavior>,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            uav_fraction: 0.0,
            edge_fraction: 0.0,
            behaviors: vec![Behavior::ForgeSignature, Behavior::Replay, Behavior::DelayInjection],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub network: NetworkConfig,
    pub mobility: MobilityConfig,
    pub energy: EnergyConfig,
    pub crypto: CryptoConfig,
    pub ledger: LedgerConfig,
    pub consensus: ConsensusConfig,
    pub trust: TrustConfig,
    pub workload: WorkloadConfig,
    pub adversary: AdversaryConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            duration_s: 600.0,
            network: NetworkConfig::default(),
            mobility: MobilityConfig::default(),
            energy: EnergyConfig::default(),
            crypto: CryptoConfig::default(),
            ledger: LedgerConfig::default(),
            consensus: ConsensusConfig::default(),
            trust: TrustConfig::default(),
            workload: WorkloadConfig::default(),
            adversary: AdversaryConfig::default(),
        }
    }
}

/// Short axis names accepted by sweeps in addition to full dotted keys.
pub const AXIS_ALIASES: &[(&str, &str)] = &[
    ("uav_count", "network.uav_count"),
    ("edge_count", "network.edge_count"),
    ("rate", "workload.arrival_rate"),
    ("arrival_rate", "workload.arrival_rate"),
    ("adversary_fraction", "adversary.uav_fraction"),
    ("edge_adversary_fraction", "adversary.edge_fraction"),
    ("duration", "duration_s"),
    ("lambda", "trust.lambda"),
    ("committee_size", "consensus.committee_size"),
];

pub fn resolve_axis(axis: &str) -> &str {
    AXIS_ALIASES.iter().find(|(a, _)| *a == axis).map(|(_, k)| *k).unwrap_or(axis)
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn reference() -> Self {
        Self::from_toml(DEFAULT_SCENARIO).expect("bundled scenario is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Set `key` (dotted path or axis alias) from a TOML literal such as
    /// `60`, `0.15` or `"pqc"`. Bare words are tried as strings.
    pub fn set(&mut self, key: &str, literal: &str) -> Result<(), ConfigError> {
        let key = resolve_axis(key);
        let mut root = toml::Table::try_from(&*self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        let mut table = &mut root;
        for p in path {
            table = match table.get_mut(*p) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(ConfigError::UnknownKey(key.into())),
            };
        }
        let old = table.get(*last).ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        let value = parse_literal(literal, old).map_err(|reason| invalid(key, reason))?;
        table.insert(last.to_string(), value);
        let cfg: ScenarioConfig = root.try_into().map_err(|e: toml::de::Error| invalid(key, e.to_string()))?;
        *self = cfg;
        Ok(())
    }

    pub fn trust_params(&self) -> TrustParams {
        self.trust.params()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive, got {v}")))
            }
        };
        let nonneg = |field: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be non-negative, got {v}")))
            }
        };
        let fraction = |field: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(field, format!("must lie in [0, 1), got {v}")))
            }
        };

        nonneg("duration_s", self.duration_s)?;
        let n = &self.network;
        if n.uav_count == 0 {
            return Err(invalid("network.uav_count", "must be positive"));
        }
        if n.edge_count == 0 {
            return Err(invalid("network.edge_count", "must be positive"));
        }
        pos("network.area_km2", n.area_km2)?;
        pos("network.range_m", n.range_m)?;
        nonneg("network.altitude_min_m", n.altitude_min_m)?;
        if n.altitude_max_m < n.altitude_min_m {
            return Err(invalid("network.altitude_max_m", "below altitude_min_m"));
        }
        if n.altitude_max_m > n.side_m() {
            return Err(invalid("network.altitude_max_m", "exceeds the area side"));
        }
        pos("network.uplink_bps", n.uplink_bps)?;
        pos("network.backhaul_bps", n.backhaul_bps)?;
        pos("network.propagation_mps", n.propagation_mps)?;
        nonneg("network.jitter_floor_ms", n.jitter_floor_ms)?;
        nonneg("network.jitter_mean_ms", n.jitter_mean_ms)?;

        let m = &self.mobility;
        if !(0.0..=1.0).contains(&m.memory) {
            return Err(invalid("mobility.memory", "must lie in [0, 1]"));
        }
        nonneg("mobility.mean_speed_mps", m.mean_speed_mps)?;
        nonneg("mobility.speed_sigma_mps", m.speed_sigma_mps)?;
        nonneg("mobility.heading_sigma_rad", m.heading_sigma_rad)?;
        pos("mobility.step_s", m.step_s)?;

        let e = &self.energy;
        pos("energy.budget_j", e.budget_j)?;
        nonneg("energy.eps0_j", e.eps0_j)?;
        nonneg("energy.eps1_j_per_m2", e.eps1_j_per_m2)?;

        let c = &self.crypto;
        if c.hash != crate::crypto::HASH_PRIMITIVE {
            return Err(invalid("crypto.hash", format!("only `{}` is supported", crate::crypto::HASH_PRIMITIVE)));
        }
        if !c.scheme.signature().is_available() {
            return Err(invalid("crypto.scheme", "the pqc suite requires building with `--features pqc`"));
        }
        for (name, cost) in [("sign", c.costs.sign), ("verify", c.costs.verify), ("kem", c.costs.kem)] {
            nonneg(&format!("crypto.costs.{name}.joules"), cost.joules)?;
            nonneg(&format!("crypto.costs.{name}.millis"), cost.millis)?;
        }

        if self.ledger.max_block_bytes == 0 {
            return Err(invalid("ledger.max_block_bytes", "must be positive"));
        }
        if self.ledger.replication >= n.edge_count && self.ledger.replication > 0 {
            return Err(invalid("ledger.replication", "must be smaller than edge_count"));
        }

        let k = &self.consensus;
        pos("consensus.window_s", k.window_s)?;
        pos("consensus.block_interval_s", k.block_interval_s)?;
        if k.committee_size == 0 || k.committee_size > n.edge_count {
            return Err(invalid("consensus.committee_size", format!("must lie in 1..={}", n.edge_count)));
        }
        if k.quorum > k.committee_size {
            return Err(invalid("consensus.quorum", "exceeds committee_size"));
        }
        pos("consensus.tau_max_s", k.tau_max_s)?;
        pos("consensus.tx_expiry_s", k.tx_expiry_s)?;
        if !k.utility().is_valid() {
            return Err(invalid("consensus.alpha", "alpha, beta, gamma must be non-negative and not all zero"));
        }

        self.trust_params().validate().map_err(|e| invalid("trust", e.to_string()))?;

        let w = &self.workload;
        pos("workload.arrival_rate", w.arrival_rate)?;
        if w.payload_min_bytes == 0 || w.payload_min_bytes > w.payload_max_bytes {
            return Err(invalid("workload.payload_min_bytes", "must be positive and at most payload_max_bytes"));
        }
        if !(0.0..=1.0).contains(&w.payload_entropy) {
            return Err(invalid("workload.payload_entropy", "must lie in [0, 1]"));
        }
        pos("workload.beacon_interval_s", w.beacon_interval_s)?;

        let a = &self.adversary;
        fraction("adversary.uav_fraction", a.uav_fraction)?;
        fraction("adversary.edge_fraction", a.edge_fraction)?;
        if a.uav_fraction > 0.0 && !a.behaviors.iter().any(|b| *b != Behavior::VoteReject) {
            return Err(invalid("adversary.behaviors", "needs at least one transaction-level behavior"));
        }
        Ok(())
    }
}

fn parse_literal(literal: &str, old: &toml::Value) -> Result<toml::Value, String> {
    let parsed = format!("v = {literal}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"));
    let value = match parsed {
        Some(v) => v,
        None => toml::Value::String(literal.to_string()),
    };
    // Integers written where floats are expected, and the reverse for whole numbers.
    Ok(match (old, value) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (toml::Value::Integer(_), toml::Value::Float(f)) if f.fract() == 0.0 => toml::Value::Integer(f as i64),
        (_, v) => v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_matches_reference_values() {
        let c = ScenarioConfig::reference();
        assert_eq!(c.network.uav_count, 100);
        assert_eq!(c.network.edge_count, 10);
        assert_eq!(c.network.area_km2, 10.0);
        assert_eq!(c.consensus.window_s, 10.0);
        assert_eq!(c.consensus.block_interval_s, 15.0);
        assert_eq!(c.ledger.max_block_bytes, 2_000_000);
        assert_eq!(c.network.range_m, 1200.0);
        assert_eq!(c.energy.budget_j, 1000.0);
        assert!((2.0..=10.0).contains(&c.workload.arrival_rate));
        assert_eq!(c.duration_s, 600.0);
    }

    #[test]
    fn empty_file_equals_defaults() {
        assert_eq!(ScenarioConfig::from_toml("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn dotted_keys_and_unknown_keys() {
        let c = ScenarioConfig::from_toml("trust.lambda = 0.9\nnetwork.uav_count = 20\n").unwrap();
        assert_eq!(c.trust.lambda, 0.9);
        assert_eq!(c.network.uav_count, 20);
        let err = ScenarioConfig::from_toml("trust.lamda = 0.9").unwrap_err();
        assert!(err.to_string().contains("lamda"), "{err}");
    }

    #[test]
    fn validation_names_the_field() {
        let err = ScenarioConfig::from_toml("trust.lambda = 1.5").unwrap_err();
        assert!(err.to_string().contains("trust"), "{err}");
        let err = ScenarioConfig::from_toml("consensus.committee_size = 11").unwrap_err();
        assert!(err.to_string().contains("consensus.committee_size"), "{err}");
        let err = ScenarioConfig::from_toml("workload.arrival_rate = 0").unwrap_err();
        assert!(err.to_string().contains("workload.arrival_rate"), "{err}");
    }

    #[test]
    fn set_by_key_and_alias() {
        let mut c = ScenarioConfig::default();
        c.set("uav_count", "40").unwrap();
        c.set("workload.arrival_rate", "200").unwrap();
        c.set("adversary_fraction", "0.15").unwrap();
        c.set("ledger.codec", "identity").unwrap();
        assert_eq!(c.network.uav_count, 40);
        assert_eq!(c.workload.arrival_rate, 200.0);
        assert_eq!(c.adversary.uav_fraction, 0.15);
        assert_eq!(c.ledger.codec, Codec::Identity);
        assert!(matches!(c.set("nope", "1"), Err(ConfigError::UnknownKey(_))));
        assert!(c.set("network.uav_count", "\"many\"").is_err());
    }

    #[test]
    fn quorum_arithmetic() {
        assert_eq!(quorum_for(5), 4);
        assert_eq!(quorum_for(3), 2);
        assert_eq!(quorum_for(4), 3);
        assert_eq!(quorum_for(1), 1);
        for m in 1..50u32 {
            assert_eq!(quorum_for(m), ((2.0 * m as f64) / 3.0).ceil() as u32);
        }
    }

    #[test]
    fn serialized_config_round_trips() {
        let c = ScenarioConfig::reference();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
