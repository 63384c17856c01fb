use std::path::{Path, PathBuf};

use serde::Serialize;

/// One row per submission attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxRecord {
    pub tag: u64,
    pub uav: u32,
    pub tx_id: String,
    pub submit_s: f64,
    pub edge: Option<u32>,
    pub recv_s: Option<f64>,
    /// ℓ_k = t_recv − t_submit.
    pub latency_s: Option<f64>,
    pub timely: Option<bool>,
    pub status: &'static str,
    pub reason: &'static str,
    pub segment: Option<u32>,
    pub height: Option<u32>,
    pub commit_s: Option<f64>,
    /// Energy attributed to this transaction, joules.
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    pub segment: u32,
    pub height: u32,
    pub block_id: String,
    pub timestamp_s: f64,
    pub txs: u32,
    pub raw_bytes: u64,
    pub compressed_bytes: u64,
    pub omega_c: f64,
    pub eta: u32,
    pub zeta: f64,
    pub theta_j: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u32,
    pub window: u32,
    pub t_propose_s: f64,
    pub committee: String,
    pub proposer: u32,
    pub eta: u32,
    pub zeta: f64,
    pub theta_j: f64,
    pub utility: f64,
    pub approvals: u32,
    pub quorum: u32,
    /// `commit`, `abort`, `no-proposal` or `busy`.
    pub outcome: &'static str,
    pub delta_cons_s: f64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub window: u32,
    pub t_end_s: f64,
    pub submitted: u64,
    pub admitted: u64,
    pub rejected: u64,
    pub committed: u64,
    pub tps: f64,
    /// Admitted over received transactions in the window, percent.
    pub validation_success: f64,
    pub committee: String,
    pub proposer: u32,
    pub mean_trust: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrustRecord {
    pub window: u32,
    pub uav: u32,
    pub score: f64,
    pub rank: f64,
    pub behavior: f64,
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub duration_s: f64,
    pub submitted: u64,
    pub committed: u64,
    pub pending: u64,
    pub expired: u64,
    pub rejected: u64,
    pub dropped: u64,
    /// Committed transactions per simulated second.
    pub tps: f64,
    pub mean_latency_s: f64,
    pub timely_fraction: f64,
    pub mean_delta_cons_s: f64,
    pub rounds: u64,
    pub rounds_committed: u64,
    /// Committed over proposed rounds, percent.
    pub validation_success_pct: f64,
    /// Committed over resolved submissions, percent.
    pub consensus_success_pct: f64,
    pub mean_omega_c: f64,
    pub energy_per_tx_j: f64,
    /// Share of committed transactions sent by the top decile of UAVs by
    /// mean trust over the run.
    pub top_decile_share: f64,
    pub uav_energy_used_j: f64,
    pub dead_uavs: u64,
}

impl Summary {
    /// Named numeric columns, used by sweeps.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("tps", self.tps),
            ("mean_latency_s", self.mean_latency_s),
            ("timely_fraction", self.timely_fraction),
            ("mean_delta_cons_s", self.mean_delta_cons_s),
            ("validation_success_pct", self.validation_success_pct),
            ("consensus_success_pct", self.consensus_success_pct),
            ("mean_omega_c", self.mean_omega_c),
            ("energy_per_tx_j", self.energy_per_tx_j),
            ("top_decile_share", self.top_decile_share),
            ("submitted", self.submitted as f64),
            ("committed", self.committed as f64),
            ("rejected", self.rejected as f64),
            ("expired", self.expired as f64),
        ]
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, Default)]
pub struct MetricsRecord {
    pub txs: Vec<TxRecord>,
    pub blocks: Vec<BlockRecord>,
    pub rounds: Vec<RoundRecord>,
    pub windows: Vec<WindowRecord>,
    pub trust: Vec<TrustRecord>,
}

pub const CSV_FILES: [&str; 5] = ["transactions.csv", "blocks.csv", "rounds.csv", "windows.csv", "trust.csv"];

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

impl MetricsRecord {
    /// Render every table as (file name, CSV bytes).
    pub fn csv_files(&self) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            (
                CSV_FILES[0],
                to_csv(
                    &self.txs,
                    &[
                        "tag", "uav", "tx_id", "submit_s", "edge", "recv_s", "latency_s", "timely", "status",
                        "reason", "segment", "height", "commit_s", "energy_j",
                    ],
                ),
            ),
            (
                CSV_FILES[1],
                to_csv(
                    &self.blocks,
                    &[
                        "segment", "height", "block_id", "timestamp_s", "txs", "raw_bytes", "compressed_bytes",
                        "omega_c", "eta", "zeta", "theta_j", "utility",
                    ],
                ),
            ),
            (
                CSV_FILES[2],
                to_csv(
                    &self.rounds,
                    &[
                        "round", "window", "t_propose_s", "committee", "proposer", "eta", "zeta", "theta_j",
                        "utility", "approvals", "quorum", "outcome", "delta_cons_s", "reason",
                    ],
                ),
            ),
            (
                CSV_FILES[3],
                to_csv(
                    &self.windows,
                    &[
                        "window", "t_end_s", "submitted", "admitted", "rejected", "committed", "tps",
                        "validation_success", "committee", "proposer", "mean_trust", "degenerate",
                    ],
                ),
            ),
            (CSV_FILES[4], to_csv(&self.trust, &["window", "uav", "score", "rank", "behavior"])),
        ]
    }

    pub fn write_csvs(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for (name, bytes) in self.csv_files() {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            out.push(path);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_have_headers_only() {
        let m = MetricsRecord::default();
        for (name, bytes) in m.csv_files() {
            let text = String::from_utf8(bytes).unwrap();
            assert_eq!(text.lines().count(), 1, "{name}");
        }
    }

    #[test]
    fn options_render_as_empty_fields() {
        let m = MetricsRecord {
            trust: vec![TrustRecord { window: 1, uav: 2, score: 0.5, rank: 0.01, behavior: 0.5 }],
            txs: vec![TxRecord {
                tag: 0,
                uav: 1,
                tx_id: "ab".into(),
                submit_s: 1.5,
                edge: None,
                recv_s: None,
                latency_s: None,
                timely: None,
                status: "dropped",
                reason: "",
                segment: None,
                height: None,
                commit_s: None,
                energy_j: 0.07,
            }],
            ..Default::default()
        };
        let files = m.csv_files();
        let tx = String::from_utf8(files[0].1.clone()).unwrap();
        assert_eq!(tx.lines().nth(1).unwrap(), "0,1,ab,1.5,,,,,dropped,,,,,0.07");
        let trust = String::from_utf8(files[4].1.clone()).unwrap();
        assert_eq!(trust.lines().nth(1).unwrap(), "1,2,0.5,0.01,0.5");
    }
}
