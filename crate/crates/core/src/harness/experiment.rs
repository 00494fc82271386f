//! Single runs, their on-disk outputs, and batches over seeds and conditions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::scenario::ScenarioKind;
use crate::shared_control::AssistCondition;
use crate::steering::SteeringSystem;
use crate::trace::{write_trace_file, TraceSample};

use super::config::RunConfig;
use super::sim::Simulation;

/// Every this many rows, the logged torques are checked against the column
/// and arm equations.
const RESIDUAL_CHECK_STRIDE: usize = 100;
const RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioKind,
    pub condition: AssistCondition,
    pub seed: u64,
    /// Every vehicle was passed before the duration limit.
    pub completed: bool,
    /// Time at which the last overtake finished, s.
    pub completion_time: Option<f64>,
    /// Distance driven up to completion, or over the whole run, m.
    pub run_length: f64,
    /// Simulated time, s.
    pub duration: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub trace: Vec<TraceSample>,
    pub report: RunReport,
}

/// Sidecar paths for a trace written to `trace_path`.
pub fn sidecar_paths(trace_path: &Path) -> (PathBuf, PathBuf) {
    let stem = trace_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let dir = trace_path.parent().unwrap_or_else(|| Path::new(""));
    (
        dir.join(format!("{stem}.config.json")),
        dir.join(format!("{stem}.report.json")),
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl RunOutput {
    /// Writes the trace CSV plus `<stem>.config.json` and `<stem>.report.json`
    /// next to it.
    pub fn write(&self, trace_path: &Path) -> Result<()> {
        write_trace_file(trace_path, &self.trace)?;
        let (config_path, report_path) = sidecar_paths(trace_path);
        write_json(&config_path, &self.config)?;
        write_json(&report_path, &self.report)
    }
}

fn spot_check_residuals(config: &RunConfig, trace: &[TraceSample]) -> Result<()> {
    let system = SteeringSystem::new(config.steering, config.arm)?;
    for row in trace.iter().step_by(RESIDUAL_CHECK_STRIDE) {
        let state = crate::steering::SteeringState {
            angle: row.theta,
            angular_velocity: row.theta_dot,
            angular_accel: row.theta_ddot,
            contact_torque: row.tau_c,
            vehicle_torque: row.tau_v,
        };
        let (column, arm) = system.residuals(&state, row.tau_msl, row.tau_das);
        if column.abs() >= RESIDUAL_TOLERANCE || arm.abs() >= RESIDUAL_TOLERANCE {
            return Err(Error::Residual {
                time: row.time,
                column,
                arm,
            });
        }
    }
    Ok(())
}

/// Runs one configuration to completion and evaluates it.
pub fn run_experiment(config: RunConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(config.clone())?;
    let mut trace = Vec::new();
    while !sim.done() {
        trace.push(sim.step(None)?);
    }
    spot_check_residuals(&config, &trace)?;
    let metrics = compute_metrics(&trace, &config.road, &config.metrics)?;
    let completion_time = sim.completed_at();
    let run_length = match completion_time {
        Some(tc) => trace
            .iter()
            .find(|r| r.time >= tc - 1e-9)
            .map_or(sim.vehicle().station, |r| r.station),
        None => sim.vehicle().station,
    };
    let report = RunReport {
        scenario: config.scenario,
        condition: config.condition,
        seed: config.seed,
        completed: completion_time.is_some(),
        completion_time,
        run_length,
        duration: sim.time(),
        metrics,
    };
    Ok(RunOutput {
        config,
        trace,
        report,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRun {
    pub scenario: ScenarioKind,
    pub condition: AssistCondition,
    pub seed: u64,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub scenario: ScenarioKind,
    pub condition: AssistCondition,
    pub runs: usize,
    /// Per headline metric: mean over runs that produced it.
    pub mean: [Option<f64>; 5],
    /// Sample standard deviation, absent with fewer than two values.
    pub std: [Option<f64>; 5],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: Vec<BatchRun>,
    pub conditions: Vec<ConditionSummary>,
}

impl BatchSummary {
    pub fn failures(&self) -> impl Iterator<Item = &BatchRun> {
        self.runs.iter().filter(|r| r.error.is_some())
    }

    /// Metric rows against condition columns, `mean ± sd` per cell.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let mut scenarios: Vec<ScenarioKind> = self.conditions.iter().map(|c| c.scenario).collect();
        scenarios.dedup();
        for scenario in scenarios {
            let cols: Vec<&ConditionSummary> = self
                .conditions
                .iter()
                .filter(|c| c.scenario == scenario)
                .collect();
            let _ = write!(out, "Scenario {scenario}\n{:<18}", "");
            for c in &cols {
                let _ = write!(out, "{:>22}", format!("{} (n={})", c.condition, c.runs));
            }
            out.push('\n');
            for (m, name) in MetricsReport::HEADLINE_NAMES.iter().enumerate() {
                let _ = write!(out, "{name:<18}");
                for c in &cols {
                    let cell = match (c.mean[m], c.std[m]) {
                        (Some(mu), Some(sd)) => format!("{mu:.3} ± {sd:.3}"),
                        (Some(mu), None) => format!("{mu:.3}"),
                        _ => "-".to_string(),
                    };
                    let _ = write!(out, "{cell:>22}");
                }
                out.push('\n');
            }
        }
        for f in self.failures() {
            let _ = writeln!(
                out,
                "FAILED scenario {} {} seed {}: {}",
                f.scenario,
                f.condition,
                f.seed,
                f.error.as_deref().unwrap_or("")
            );
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

/// Runs every configuration in parallel. Traces are written to `trace_dir`
/// when given, named `<scenario>_<condition>_seed<seed>.csv`.
pub fn batch(configs: Vec<RunConfig>, trace_dir: Option<&Path>) -> Result<BatchSummary> {
    if configs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let runs: Vec<BatchRun> = configs
        .into_par_iter()
        .map(|config| {
            let (scenario, condition, seed) = (config.scenario, config.condition, config.seed);
            let outcome = run_experiment(config).and_then(|out| {
                if let Some(dir) = trace_dir {
                    out.write(&dir.join(format!("{scenario}_{condition}_seed{seed}.csv")))?;
                }
                Ok(out.report)
            });
            match outcome {
                Ok(report) => BatchRun {
                    scenario,
                    condition,
                    seed,
                    report: Some(report),
                    error: None,
                },
                Err(e) => {
                    log::error!("scenario {scenario} {condition} seed {seed} failed: {e}");
                    BatchRun {
                        scenario,
                        condition,
                        seed,
                        report: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    let mut keys: Vec<(ScenarioKind, AssistCondition)> = Vec::new();
    for r in &runs {
        if !keys.contains(&(r.scenario, r.condition)) {
            keys.push((r.scenario, r.condition));
        }
    }
    let conditions = keys
        .into_iter()
        .map(|(scenario, condition)| {
            let reports: Vec<&RunReport> = runs
                .iter()
                .filter(|r| r.scenario == scenario && r.condition == condition)
                .filter_map(|r| r.report.as_ref())
                .collect();
            let mut mean = [None; 5];
            let mut std = [None; 5];
            for m in 0..5 {
                let values: Vec<f64> = reports
                    .iter()
                    .filter_map(|r| r.metrics.headline()[m])
                    .collect();
                (mean[m], std[m]) = mean_std(&values);
            }
            ConditionSummary {
                scenario,
                condition,
                runs: reports.len(),
                mean,
                std,
            }
        })
        .collect();
    Ok(BatchSummary { runs, conditions })
}
