//! Configuration, the closed-loop simulation, and experiment runners.

mod config;
mod experiment;
mod sim;

pub use config::RunConfig;
pub use experiment::{
    batch, run_experiment, sidecar_paths, BatchRun, BatchSummary, ConditionSummary, RunOutput,
    RunReport,
};
pub use sim::{Simulation, BLOW_UP_LIMIT};
