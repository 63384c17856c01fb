//! Discrete-event simulation binding mobility, workload, admission,
//! consensus and trust into one deterministic run.

mod queue;
mod records;
mod sim;

use std::collections::BTreeMap;

use thiserror::Error;

pub use queue::EventQueue;
pub use records::{
    BlockRecord, MetricsRecord, RoundRecord, Summary, TrustRecord, TxRecord, WindowRecord, CSV_FILES,
};

use crate::config::{Behavior, ConfigError, ScenarioConfig};
use crate::consensus::CommitteeError;
use crate::crypto::{CryptoError, PublicKey};
use crate::ledger::dump::{encode_dump, DumpHeader};
use crate::ledger::{LedgerError, LedgerSegment};
use crate::trust::TrustError;
use crate::types::NodeId;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error(transparent)]
    Committee(#[from] CommitteeError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub summary: Summary,
    pub metrics: MetricsRecord,
    /// Final ledger segment of every edge node, in id order.
    pub segments: Vec<LedgerSegment>,
    pub registry: BTreeMap<NodeId, PublicKey>,
    pub compromised: BTreeMap<NodeId, Behavior>,
    pub malicious_edges: Vec<NodeId>,
    /// Energy recorded against each (mains-powered) edge node.
    pub edge_energy_j: BTreeMap<NodeId, f64>,
}

impl RunOutput {
    pub fn dump_header(&self) -> DumpHeader {
        DumpHeader {
            seed: self.config.seed,
            codec: self.config.ledger.codec,
            signature_scheme: self.config.crypto.scheme.signature(),
            utility: self.config.consensus.utility(),
            max_block_bytes: self.config.ledger.max_block_bytes,
        }
    }

    /// Binary ledger dump readable by the audit.
    pub fn ledger_dump(&self) -> Vec<u8> {
        encode_dump(&self.dump_header(), &self.registry, &self.segments)
    }
}

/// Run one scenario to its configured duration.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, EngineError> {
    config.validate()?;
    sim::Simulation::new(config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::audit::audit;
    use crate::ledger::dump::decode_dump;

    fn smoke() -> ScenarioConfig {
        let mut c = ScenarioConfig::reference();
        c.network.uav_count = 10;
        c.network.edge_count = 2;
        c.network.area_km2 = 1.0;
        c.consensus.committee_size = 2;
        c.ledger.replication = 1;
        c.workload.arrival_rate = 2.0;
        c.duration_s = 60.0;
        c
    }

    #[test]
    fn smoke_scenario_commits() {
        let out = run(&smoke()).unwrap();
        let s = &out.summary;
        assert!(s.rounds_committed >= 1, "{s:?}");
        assert!(s.committed > 0);
        assert_eq!(s.submitted, s.committed + s.pending + s.expired + s.rejected + s.dropped);
        let report = audit(&decode_dump(&out.ledger_dump()).unwrap());
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn zero_duration_is_empty() {
        let mut c = smoke();
        c.duration_s = 0.0;
        let out = run(&c).unwrap();
        assert_eq!(out.summary.submitted, 0);
        assert!(out.metrics.txs.is_empty() && out.metrics.rounds.is_empty() && out.metrics.windows.is_empty());
        assert!(out.segments.iter().all(|s| s.height() == 0));
    }

    #[test]
    fn identical_seeds_give_identical_csvs() {
        let a = run(&smoke()).unwrap().metrics.csv_files();
        let b = run(&smoke()).unwrap().metrics.csv_files();
        assert_eq!(a, b);
        let mut other = smoke();
        other.seed = 2;
        assert_ne!(run(&other).unwrap().metrics.csv_files()[0], a[0]);
    }

    #[test]
    fn invalid_config_is_refused() {
        let mut c = smoke();
        c.consensus.committee_size = 5;
        assert!(matches!(run(&c), Err(EngineError::Config(_))));
    }

    #[test]
    fn malicious_majority_aborts_every_round() {
        let mut c = smoke();
        c.network.edge_count = 3;
        c.consensus.committee_size = 3;
        c.adversary.edge_fraction = 0.67;
        let out = run(&c).unwrap();
        assert_eq!(out.malicious_edges.len(), 2);
        assert_eq!(out.summary.rounds_committed, 0);
        assert!(out.summary.rounds > 0);
    }
}
