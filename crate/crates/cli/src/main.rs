//! `coopsteer` command-line front end: single runs, batches, trace
//! re-analysis and the live serve mode.

mod serve;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coopsteer::harness::{batch, run_experiment, sidecar_paths, RunConfig};
use coopsteer::metrics::compute_metrics;
use coopsteer::scenario::ScenarioKind;
use coopsteer::shared_control::AssistCondition;
use coopsteer::trace::read_trace_file;

#[derive(Parser)]
#[command(
    name = "coopsteer",
    version,
    about = "Haptic shared steering control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print its report.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        /// Trace CSV to write; config and report sidecars go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every condition over a range of seeds and print a summary table.
    Batch {
        #[command(flatten)]
        common: ConfigArgs,
        /// Seed range, `N..M` (exclusive) or `N..=M`.
        #[arg(long, default_value = "0..10")]
        seeds: String,
        /// Comma-separated conditions.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "no_system,gain_tuned,tlc"
        )]
        conditions: Vec<AssistCondition>,
        /// Directory for per-run traces and `summary.json`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Live session over WebSocket: external torque commands in, state
    /// snapshots out, paced at the control rate.
    Serve {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Address to bind.
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Stop after this many simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Where to record the session trace.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics for a saved trace.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        /// Configuration to take road and metric parameters from. Defaults to
        /// the trace's config sidecar when present.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    condition: Option<AssistCondition>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file of flat keys, e.g. `assist.k0 = 0.4`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, `key=value`. Repeatable; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    /// Defaults, then the file, then flags, then `--set`.
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        if let Some(s) = self.scenario {
            config.scenario = s;
        }
        if let Some(c) = self.condition {
            config.condition = c;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        for o in &self.overrides {
            config.apply_assignment(o)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let (lo, hi, inclusive) = if let Some((a, b)) = text.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = text.split_once("..") {
        (a, b, false)
    } else {
        let n: u64 = text.trim().parse().context("seed range")?;
        return Ok(vec![n]);
    };
    let lo: u64 = lo.trim().parse().context("seed range start")?;
    let hi: u64 = hi.trim().parse().context("seed range end")?;
    let seeds: Vec<u64> = if inclusive {
        (lo..=hi).collect()
    } else {
        (lo..hi).collect()
    };
    if seeds.is_empty() {
        bail!("seed range {text:?} is empty");
    }
    Ok(seeds)
}

fn cmd_run(common: &ConfigArgs, out: Option<&Path>) -> Result<()> {
    let mut config = common.resolve()?;
    config.output_path = out.map(Path::to_path_buf);
    let output = run_experiment(config)?;
    if let Some(path) = out {
        output
            .write(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", serde_json::to_string_pretty(&output.report)?);
    Ok(())
}

fn cmd_batch(
    common: &ConfigArgs,
    seeds: &str,
    conditions: &[AssistCondition],
    out_dir: Option<&Path>,
) -> Result<()> {
    let base = common.resolve()?;
    let seeds = parse_seeds(seeds)?;
    if conditions.is_empty() {
        bail!("no conditions given");
    }
    let mut configs = Vec::new();
    for &condition in conditions {
        for &seed in &seeds {
            configs.push(RunConfig {
                condition,
                seed,
                ..base.clone()
            });
        }
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let summary = batch(configs, out_dir)?;
    print!("{}", summary.table());
    if let Some(dir) = out_dir {
        let path = dir.join("summary.json");
        std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = summary.failures().count();
    if failed > 0 {
        bail!("{failed} of {} runs failed", summary.runs.len());
    }
    Ok(())
}

fn cmd_metrics(trace_path: &Path, config_path: Option<&Path>) -> Result<()> {
    let trace = read_trace_file(trace_path)?;
    let sidecar = sidecar_paths(trace_path).0;
    let source = config_path
        .map(Path::to_path_buf)
        .or_else(|| sidecar.exists().then_some(sidecar));
    let config = match source {
        Some(p) => {
            let text =
                std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            if p.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            } else {
                let mut c = RunConfig::default();
                c.apply_toml(&text)?;
                c
            }
        }
        None => RunConfig::default(),
    };
    let report = compute_metrics(&trace, &config.road, &config.metrics)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, out } => cmd_run(&common, out.as_deref()),
        Command::Batch {
            common,
            seeds,
            conditions,
            out_dir,
        } => cmd_batch(&common, &seeds, &conditions, out_dir.as_deref()),
        Command::Serve {
            common,
            port,
            host,
            duration,
            out,
        } => serve::serve(
            common.resolve()?,
            &format!("{host}:{port}"),
            duration,
            out.as_deref(),
        ),
        Command::Metrics { trace, config } => cmd_metrics(&trace, config.as_deref()),
    }
}
