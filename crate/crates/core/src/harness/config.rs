//! Run configuration with flat dotted-key overrides.
//!
//! Every parameter has a flat key such as `assist.k0` or `driver.noise_std`.
//! A configuration file is TOML; tables and dotted keys are equivalent, so
//! `[assist]\nk0 = 0.4` and `"assist.k0" = 0.4` set the same value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::driver::DriverParams;
use crate::error::{Error, Result};
use crate::metrics::MetricsParams;
use crate::road::RoadSpec;
use crate::scenario::ScenarioKind;
use crate::shared_control::{AssistCondition, AssistParams};
use crate::steering::{ArmParams, SteeringParams, MAX_STEP};
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub condition: AssistCondition,
    pub seed: u64,
    /// Dynamics step, s.
    pub dt: f64,
    /// Control, estimation and logging period, s.
    pub control_period: f64,
    /// Hard stop, s.
    pub duration_limit: f64,
    /// Extra time simulated after the last vehicle has been passed, s.
    pub tail_time: f64,
    /// Host lateral position at t = 0, m. Both the driver and the assist
    /// start out aiming for the nearest lane centre.
    pub initial_lateral_position: f64,
    pub output_path: Option<PathBuf>,
    pub steering: SteeringParams,
    pub arm: ArmParams,
    pub vehicle: VehicleParams,
    pub road: RoadSpec,
    pub assist: AssistParams,
    pub driver: DriverParams,
    pub metrics: MetricsParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::A,
            condition: AssistCondition::GainTuned,
            seed: 0,
            dt: 0.001,
            control_period: 0.01,
            duration_limit: 900.0,
            tail_time: 10.0,
            initial_lateral_position: 0.0,
            output_path: None,
            steering: SteeringParams::default(),
            arm: ArmParams::default(),
            vehicle: VehicleParams::default(),
            road: RoadSpec::default(),
            assist: AssistParams::default(),
            driver: DriverParams::default(),
            metrics: MetricsParams::default(),
        }
    }
}

impl RunConfig {
    pub fn new(scenario: ScenarioKind, condition: AssistCondition, seed: u64) -> Self {
        Self {
            scenario,
            condition,
            seed,
            ..Default::default()
        }
    }

    /// Dynamics substeps per control period.
    pub fn substeps(&self) -> Result<usize> {
        let ratio = self.control_period / self.dt;
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > 1e-9 * n {
            return Err(Error::Config(format!(
                "control period {} s is not an integer multiple of dt {} s",
                self.control_period, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_STEP) {
            return Err(Error::Config(format!("dt must lie in (0, {MAX_STEP}] s")));
        }
        self.substeps()?;
        if !(self.duration_limit > 0.0 && self.duration_limit.is_finite()) {
            return Err(Error::Config("duration limit must be positive".into()));
        }
        if !(self.tail_time >= 0.0 && self.tail_time.is_finite()) {
            return Err(Error::Config("tail time must be non-negative".into()));
        }
        if !self.initial_lateral_position.is_finite() {
            return Err(Error::Config(
                "initial lateral position must be finite".into(),
            ));
        }
        self.steering.validate()?;
        self.arm.validate()?;
        self.vehicle.validate()?;
        self.road.validate()?;
        self.assist.validate()?;
        self.driver.validate()?;
        Ok(())
    }

    /// All flat keys with their current values, in a stable order.
    pub fn flat_entries(&self) -> Result<Vec<(String, Value)>> {
        let mut out = Vec::new();
        flatten_json("", &serde_json::to_value(self)?, &mut out);
        Ok(out)
    }

    /// Sets one flat key. Unknown keys and ill-typed values are rejected.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        let mut slot = &mut doc;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| Error::Config(format!("unknown key {key:?}")))?;
        }
        if slot.is_object() {
            return Err(Error::Config(format!("{key:?} is a section, not a value")));
        }
        *slot = value;
        *self = serde_json::from_value(doc)
            .map_err(|e| Error::Config(format!("bad value for {key:?}: {e}")))?;
        Ok(())
    }

    /// Sets a key from command-line text. The text is read as a TOML value;
    /// anything that does not parse is taken as a bare string.
    pub fn set_str(&mut self, key: &str, raw: &str) -> Result<()> {
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => {
                let v = t.remove("v").expect("parsed table has the key");
                serde_json::to_value(v)?
            }
            Err(_) => Value::String(raw.to_string()),
        };
        self.set(key, value)
    }

    /// Parses `key=value`.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set_str(key.trim(), raw.trim())
    }

    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut flat = Vec::new();
        flatten_json("", &serde_json::to_value(table)?, &mut flat);
        for (key, value) in flat {
            self.set(&key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_toml(&text)
    }
}

fn flatten_json(prefix: &str, value: &Value, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}
