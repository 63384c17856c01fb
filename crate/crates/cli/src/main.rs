use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use uavchain::config::ScenarioConfig;
use uavchain::engine::{self, Summary};
use uavchain::experiment::{self, Figure, WORKERS_ENV};
use uavchain::ledger::audit::audit;
use uavchain::ledger::dump::decode_dump;

const MANIFEST: &str = "manifest.toml";
const LEDGER_DUMP: &str = "ledger.bin";

#[derive(Parser)]
#[command(name = "uavchain", version, about = "Trust-ranked post-quantum blockchain simulator for UAV edge networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (dotted-key TOML). Defaults to the bundled reference scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override any parameter, e.g. `--set trust.lambda=0.9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics CSVs, a manifest and a ledger dump.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Reproduce the run recorded in a manifest instead of loading a config.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip writing the ledger dump.
        #[arg(long)]
        no_dump: bool,
    },
    /// Sweep one parameter over a list of values with replicated seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dotted key or alias (uav_count, edge_count, rate, adversary_fraction, ...).
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 3)]
        replications: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Emit plot data for one figure, or `all`.
    Figures {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// latency, throughput, energy, success, compression, trustrank, resilience or all.
        #[arg(long)]
        figure: String,
        #[arg(long, default_value_t = 5)]
        replications: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Re-verify a ledger dump: linkage, Merkle roots, sizes, scores and signatures.
    Audit {
        /// Path to a ledger dump written by `run`.
        dump: PathBuf,
    },
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: String,
    version: String,
    seed: u64,
    created_unix_s: u64,
    outputs: Vec<String>,
    compromised_uavs: BTreeMap<String, String>,
    malicious_edges: Vec<u32>,
    summary: &'a Summary,
    config: &'a ScenarioConfig,
}

/// The part of a manifest read back by `run --manifest`.
#[derive(Deserialize)]
struct ManifestConfig {
    config: ScenarioConfig,
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ScenarioConfig::reference(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("`--set {o}` is not KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_manifest(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: ManifestConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    m.config.validate()?;
    Ok(m.config)
}

fn print_summary(s: &Summary) {
    println!("seed                  {}", s.seed);
    println!("transactions          {} submitted, {} committed, {} pending, {} expired, {} rejected, {} dropped",
        s.submitted, s.committed, s.pending, s.expired, s.rejected, s.dropped);
    println!("throughput            {:.2} TPS", s.tps);
    println!("mean latency          {:.4} s", s.mean_latency_s);
    println!("mean consensus delay  {:.4} s", s.mean_delta_cons_s);
    println!("validation success    {:.2} % ({} of {} rounds)", s.validation_success_pct, s.rounds_committed, s.rounds);
    println!("consensus success     {:.2} %", s.consensus_success_pct);
    println!("mean compression      {:.4}", s.mean_omega_c);
    println!("energy per tx         {:.4} J", s.energy_per_tx_j);
}

fn cmd_run(cfg: ScenarioConfig, out: &Path, dump: bool) -> Result<()> {
    let result = engine::run(&cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs: Vec<String> = result
        .metrics
        .write_csvs(out)?
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    if dump {
        std::fs::write(out.join(LEDGER_DUMP), result.ledger_dump())?;
        outputs.push(LEDGER_DUMP.into());
    }
    let manifest = RunManifest {
        tool: env!("CARGO_BIN_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        outputs,
        compromised_uavs: result.compromised.iter().map(|(k, v)| (k.0.to_string(), v.name().to_string())).collect(),
        malicious_edges: result.malicious_edges.iter().map(|n| n.0).collect(),
        summary: &result.summary,
        config: &cfg,
    };
    std::fs::write(out.join(MANIFEST), toml::to_string(&manifest)?)?;
    print_summary(&result.summary);
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_audit(path: &Path) -> Result<bool> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let dump = decode_dump(&bytes)?;
    let report = audit(&dump);
    println!(
        "{} segments, {} blocks, {} transactions, {} signatures checked",
        report.segments, report.blocks, report.transactions, report.signatures_checked
    );
    for f in &report.failures {
        println!("FAIL {f}");
    }
    println!("{}", if report.passed() { "audit passed" } else { "audit FAILED" });
    Ok(report.passed())
}

fn run_cli(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { scenario, manifest, out, no_dump } => {
            let mut cfg = match &manifest {
                Some(m) => load_manifest(m)?,
                None => load_scenario(&scenario)?,
            };
            if manifest.is_some() {
                if let Some(seed) = scenario.seed {
                    cfg.seed = seed;
                }
            }
            cmd_run(cfg, &out, !no_dump)?;
            Ok(true)
        }
        Command::Sweep { scenario, axis, values, replications, out, workers } => {
            let cfg = load_scenario(&scenario)?;
            let workers = workers.unwrap_or_else(experiment::worker_count);
            let table = experiment::sweep(&cfg, &axis, &values, replications, workers)?;
            std::fs::create_dir_all(&out)?;
            let name = format!("sweep_{}.csv", table.axis.replace('.', "_"));
            std::fs::write(out.join(&name), table.to_csv())?;
            println!("wrote {}", out.join(name).display());
            Ok(true)
        }
        Command::Figures { scenario, figure, replications, out, workers } => {
            let figures: Vec<Figure> =
                if figure == "all" { Figure::ALL.to_vec() } else { vec![figure.parse::<Figure>()?] };
            let cfg = load_scenario(&scenario)?;
            let workers = workers.unwrap_or_else(experiment::worker_count);
            let mut data = Vec::new();
            for f in figures {
                data.push(experiment::figure(f, &cfg, replications, workers)?);
            }
            std::fs::create_dir_all(&out)?;
            for d in data {
                let path = out.join(d.file_name());
                std::fs::write(&path, d.to_csv())?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Audit { dump } => {
            if !dump.exists() {
                bail!("{} does not exist", dump.display());
            }
            cmd_audit(&dump)
        }
    }
}

fn main() -> ExitCode {
    match run_cli(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
