//! Parameter sweeps over replicated runs and the figure datasets built on them.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::engine::{run, EngineError, RunOutput, Summary};

/// Environment variable that caps the number of sweep worker threads.
pub const WORKERS_ENV: &str = "UAVCHAIN_WORKERS";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("value `{value}` for axis `{axis}`: {source}")]
    BadValue { axis: String, value: String, source: ConfigError },
    #[error("run with {axis} = {value}, seed {seed} failed: {source}")]
    Run { axis: String, value: String, seed: u64, source: EngineError },
    #[error("unknown figure `{0}`; expected one of latency, throughput, energy, success, compression, trustrank, resilience")]
    UnknownFigure(String),
    #[error("replications must be positive")]
    NoReplications,
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Worker threads from the environment, defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Seed of replication `r` of a sweep point.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub runs: Vec<Summary>,
}

impl SweepRow {
    pub fn stat(&self, metric: &str) -> (f64, f64) {
        let xs: Vec<f64> = self.runs.iter().filter_map(|s| s.metric(metric)).collect();
        mean_std(&xs)
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// One row per value: the axis value, the replication count and
    /// `<metric>_mean,<metric>_std` for every summary metric.
    pub fn to_csv(&self) -> String {
        let names: Vec<&str> = self
            .rows
            .first()
            .and_then(|r| r.runs.first())
            .map(|s| s.metrics().into_iter().map(|(n, _)| n).collect())
            .unwrap_or_default();
        let mut out = String::new();
        let _ = write!(out, "{},replications", self.axis);
        for n in &names {
            let _ = write!(out, ",{n}_mean,{n}_std");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.value, row.runs.len());
            for n in &names {
                let (m, s) = row.stat(n);
                let _ = write!(out, ",{m},{s}");
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, metric: &str) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| r.stat(metric)).collect()
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))
}

/// Configurations of every (value, replication) pair, validated up front.
fn plan(
    base: &ScenarioConfig,
    axis: &str,
    values: &[String],
    replications: usize,
) -> Result<Vec<(usize, ScenarioConfig)>, ExperimentError> {
    if replications == 0 {
        return Err(ExperimentError::NoReplications);
    }
    let mut jobs = Vec::new();
    for (vi, v) in values.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.set(axis, v).map_err(|e| match e {
            ConfigError::UnknownKey(_) => ExperimentError::UnknownAxis(axis.to_string()),
            source => ExperimentError::BadValue { axis: axis.to_string(), value: v.clone(), source },
        })?;
        cfg.validate().map_err(|source| ExperimentError::BadValue { axis: axis.into(), value: v.clone(), source })?;
        for r in 0..replications {
            let mut c = cfg.clone();
            c.seed = replication_seed(base.seed, r);
            jobs.push((vi, c));
        }
    }
    Ok(jobs)
}

/// Run `f` on every job in parallel, preserving job order.
fn execute<T: Send>(
    jobs: Vec<(usize, ScenarioConfig)>,
    axis: &str,
    values: &[String],
    workers: usize,
    f: impl Fn(RunOutput) -> T + Sync,
) -> Result<Vec<(usize, T)>, ExperimentError> {
    let results: Vec<Result<(usize, T), ExperimentError>> = pool(workers)?.install(|| {
        jobs.into_par_iter()
            .map(|(vi, cfg)| {
                let seed = cfg.seed;
                run(&cfg).map(|o| (vi, f(o))).map_err(|source| ExperimentError::Run {
                    axis: axis.to_string(),
                    value: values[vi].clone(),
                    seed,
                    source,
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

/// `replications` seeds per value of `axis`; rows follow `values`.
pub fn sweep(
    base: &ScenarioConfig,
    axis: &str,
    values: &[String],
    replications: usize,
    workers: usize,
) -> Result<SweepTable, ExperimentError> {
    let jobs = plan(base, axis, values, replications)?;
    let results = execute(jobs, axis, values, workers, |o| o.summary)?;
    let mut rows: Vec<SweepRow> = values.iter().map(|v| SweepRow { value: v.clone(), runs: Vec::new() }).collect();
    for (vi, s) in results {
        rows[vi].runs.push(s);
    }
    Ok(SweepTable { axis: crate::config::resolve_axis(axis).to_string(), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Latency,
    Throughput,
    Energy,
    Success,
    Compression,
    TrustRank,
    Resilience,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::Latency,
        Figure::Throughput,
        Figure::Energy,
        Figure::Success,
        Figure::Compression,
        Figure::TrustRank,
        Figure::Resilience,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Latency => "latency",
            Figure::Throughput => "throughput",
            Figure::Energy => "energy",
            Figure::Success => "success",
            Figure::Compression => "compression",
            Figure::TrustRank => "trustrank",
            Figure::Resilience => "resilience",
        }
    }

    /// Sweep axis and values; the trust figure is indexed by decile instead.
    pub fn axis(self) -> (&'static str, Vec<&'static str>) {
        let uavs = vec!["20", "40", "60", "80", "100"];
        match self {
            Figure::Latency | Figure::Energy | Figure::Success => ("uav_count", uavs),
            Figure::Throughput => ("arrival_rate", vec!["10", "25", "50", "100", "150", "200", "300"]),
            Figure::Compression => ("arrival_rate", vec!["2", "4", "6", "8", "10"]),
            Figure::TrustRank => ("decile", vec!["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"]),
            Figure::Resilience => ("adversary_fraction", vec!["0", "0.05", "0.10", "0.15", "0.20", "0.25"]),
        }
    }

    /// Summary metric plotted on the y axis.
    pub fn metric(self) -> &'static str {
        match self {
            Figure::Latency => "mean_latency_s",
            Figure::Throughput => "tps",
            Figure::Energy => "energy_per_tx_j",
            Figure::Success => "validation_success_pct",
            Figure::Compression => "mean_omega_c",
            Figure::TrustRank => "committed_share",
            Figure::Resilience => "consensus_success_pct",
        }
    }
}

impl FromStr for Figure {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Figure::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| ExperimentError::UnknownFigure(s.to_string()))
    }
}

/// Plot data: x, y mean, y std and the replication count per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub figure: Figure,
    pub x_name: String,
    pub y_name: String,
    pub rows: Vec<(String, f64, f64, usize)>,
}

impl FigureData {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}_mean,{}_std,replications\n", self.x_name, self.y_name, self.y_name);
        for (x, m, s, n) in &self.rows {
            let _ = writeln!(out, "{x},{m},{s},{n}");
        }
        out
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.figure.id())
    }
}

/// Per-decile share of committed transactions, deciles by mean trust
/// (decile 1 holds the most trusted UAVs).
pub fn decile_shares(out: &RunOutput) -> Vec<f64> {
    let n = out.config.network.uav_count as usize;
    let mut trust = vec![0.0; n];
    for r in &out.metrics.trust {
        trust[r.uav as usize] += r.score;
    }
    let mut committed = vec![0u64; n];
    for t in &out.metrics.txs {
        if t.status == "committed" {
            committed[t.uav as usize] += 1;
        }
    }
    let total: u64 = committed.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| trust[b].total_cmp(&trust[a]).then(a.cmp(&b)));
    let mut shares = vec![0.0; 10];
    for (rank, i) in order.into_iter().enumerate() {
        let d = rank * 10 / n.max(1);
        shares[d] += committed[i] as f64;
    }
    if total > 0 {
        for s in &mut shares {
            *s /= total as f64;
        }
    }
    shares
}

pub fn figure(
    fig: Figure,
    base: &ScenarioConfig,
    replications: usize,
    workers: usize,
) -> Result<FigureData, ExperimentError> {
    let (axis, values) = fig.axis();
    let values: Vec<String> = values.into_iter().map(String::from).collect();
    if fig == Figure::TrustRank {
        let one = vec![base.seed.to_string()];
        let jobs = plan(base, "seed", &one, replications)?;
        let per_run = execute(jobs, "seed", &one, workers, |o| decile_shares(&o))?;
        let rows = (0..10)
            .map(|d| {
                let xs: Vec<f64> = per_run.iter().map(|(_, s)| s[d]).collect();
                let (m, s) = mean_std(&xs);
                (values[d].clone(), m, s, xs.len())
            })
            .collect();
        return Ok(FigureData { figure: fig, x_name: axis.into(), y_name: fig.metric().into(), rows });
    }
    let table = sweep(base, axis, &values, replications, workers)?;
    let rows = table
        .rows
        .iter()
        .map(|r| {
            let (m, s) = r.stat(fig.metric());
            (r.value.clone(), m, s, r.runs.len())
        })
        .collect();
    Ok(FigureData { figure: fig, x_name: axis.into(), y_name: fig.metric().into(), rows })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
