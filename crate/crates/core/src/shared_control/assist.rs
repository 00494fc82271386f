//! Lane-keeping assist: preview torque controller with status-based gain
//! tuning and target-lane switching.
//!
//! One control period runs: classify the pseudo-work, pick the gain
//! (sigmoid in State II, `K0` otherwise), test for lane-change intent and
//! switch the target lane, then run the lagged preview controller.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::gain::GainParams;
use super::lane::{switch_lane, tlc_to_boundary};
use super::status::{classify, CooperativeStatus, StatusThresholds};
use super::work::PseudoWorkEstimate;
use crate::error::{Error, Result};
use crate::road::RoadSpec;
use crate::vehicle::VehicleState;

/// Which assist system is installed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssistCondition {
    /// No assist torque at all.
    NoSystem,
    /// Status-based gain tuning with intent-driven lane switching.
    #[default]
    GainTuned,
    /// Constant gain with time-to-line-crossing lane switching.
    Tlc,
}

impl AssistCondition {
    pub const ALL: [AssistCondition; 3] = [
        AssistCondition::NoSystem,
        AssistCondition::GainTuned,
        AssistCondition::Tlc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AssistCondition::NoSystem => "no_system",
            AssistCondition::GainTuned => "gain_tuned",
            AssistCondition::Tlc => "tlc",
        }
    }
}

impl fmt::Display for AssistCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssistCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AssistCondition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown condition {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssistParams {
    /// Controller lag time constant T, s.
    pub time_constant: f64,
    /// Preview time t_p, s.
    pub preview_time: f64,
    /// Switch threshold of the TLC baseline, s.
    pub tlc_threshold: f64,
    /// A new lane switch is allowed once the vehicle is this close to the
    /// current target, m.
    pub rearm_band: f64,
    /// Pseudo-work window ΔT, s.
    pub window_length: f64,
    #[serde(flatten)]
    pub gain: GainParams,
    #[serde(flatten)]
    pub thresholds: StatusThresholds,
}

impl Default for AssistParams {
    fn default() -> Self {
        Self {
            time_constant: 0.15,
            preview_time: 1.3,
            tlc_threshold: 1.5,
            rearm_band: 0.5,
            window_length: 1.0,
            gain: GainParams::default(),
            thresholds: StatusThresholds::default(),
        }
    }
}

impl AssistParams {
    pub fn validate(&self) -> Result<()> {
        self.gain.validate()?;
        self.thresholds.validate()?;
        let positive = [
            self.time_constant,
            self.preview_time,
            self.tlc_threshold,
            self.rearm_band,
            self.window_length,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(
                "assist time constant, preview time, TLC threshold, re-arm band and work window must be positive"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Runtime state of the assist carried from one control period to the next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssistState {
    /// Output of the controller lag, N·m.
    pub controller_lag_state: f64,
    /// Current gain K, N·m/m.
    pub gain: f64,
    /// Target lane centre y_d, m.
    pub target_lane_center: f64,
    pub status: CooperativeStatus,
    /// False between a lane switch and the vehicle settling in the new lane.
    pub switch_armed: bool,
}

impl AssistState {
    pub fn new(params: &AssistParams, target_lane_center: f64) -> Self {
        Self {
            controller_lag_state: 0.0,
            gain: params.gain.k0,
            target_lane_center,
            status: CooperativeStatus::DriverLedCooperative,
            switch_armed: true,
        }
    }
}

/// Result of one assist update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssistStep {
    pub state: AssistState,
    /// Assist torque τ_das to apply over the next control period, N·m.
    pub torque: f64,
    /// Lane-change intent was detected in this period.
    pub intent_detected: bool,
    /// The target lane changed in this period.
    pub switched: bool,
    /// Time to cross the target lane boundary ahead, s.
    pub tlc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneKeepingAssist {
    pub params: AssistParams,
    pub condition: AssistCondition,
    pub road: RoadSpec,
    /// Vehicle speed, m/s.
    pub speed: f64,
}

impl LaneKeepingAssist {
    pub fn new(
        params: AssistParams,
        condition: AssistCondition,
        road: RoadSpec,
        speed: f64,
    ) -> Result<Self> {
        params.validate()?;
        road.validate()?;
        Ok(Self {
            params,
            condition,
            road,
            speed,
        })
    }

    /// Preview distance L = v·t_p.
    pub fn preview_distance(&self) -> f64 {
        self.speed * self.params.preview_time
    }

    pub fn initial_state(&self, target_lane_center: f64) -> AssistState {
        AssistState::new(&self.params, target_lane_center)
    }

    pub fn work_estimate(&self) -> Result<PseudoWorkEstimate> {
        PseudoWorkEstimate::new(self.params.window_length)
    }

    /// Lagged preview controller `K/(Ts + 1)·(L·φ + e)`, discretised exactly
    /// for an input held over `dt`. Returns the new lag output.
    ///
    /// `heading_term` is φ and `lateral_error` is e, both already signed so
    /// that positive values call for steering right.
    pub fn das_torque(
        &self,
        lag_state: f64,
        heading_term: f64,
        lateral_error: f64,
        gain: f64,
        dt: f64,
    ) -> f64 {
        if self.condition == AssistCondition::NoSystem {
            return 0.0;
        }
        let input = gain * (self.preview_distance() * heading_term + lateral_error);
        let decay = (-dt / self.params.time_constant).exp();
        input + (lag_state - input) * decay
    }

    pub fn update_assist(
        &self,
        state: &AssistState,
        vehicle: &VehicleState,
        work: &PseudoWorkEstimate,
        dt: f64,
    ) -> AssistStep {
        let w = work.work();
        let p = &self.params;
        let y = vehicle.lateral_position;
        let ydot = vehicle.lateral_velocity;

        let status = classify(w.contact, w.das, w.muscle, &p.thresholds);
        let mut next = AssistState { status, ..*state };

        if !next.switch_armed && (y - next.target_lane_center).abs() < p.rearm_band {
            next.switch_armed = true;
        }

        let (tlc, shared) = tlc_to_boundary(y, ydot, next.target_lane_center, &self.road);
        let mut intent_detected = false;
        let mut switched = false;

        match self.condition {
            AssistCondition::NoSystem => {
                next.gain = p.gain.k0;
            }
            AssistCondition::GainTuned => {
                next.gain = p.gain.das_gain(w.das, status, state.gain, dt);
                intent_detected = status == CooperativeStatus::DriverLedUncooperative
                    && p.gain.detect_intent(next.gain);
            }
            AssistCondition::Tlc => {
                next.gain = p.gain.k0;
                intent_detected = shared && tlc < p.tlc_threshold;
            }
        }

        if intent_detected && next.switch_armed {
            let target = switch_lane(next.target_lane_center, ydot, &self.road);
            if target != next.target_lane_center {
                next.target_lane_center = target;
                next.switch_armed = false;
                switched = true;
            }
        }

        let torque = self.das_torque(
            state.controller_lag_state,
            -vehicle.heading,
            next.target_lane_center - y,
            next.gain,
            dt,
        );
        next.controller_lag_state = torque;

        AssistStep {
            state: next,
            torque,
            intent_detected,
            switched,
            tlc,
        }
    }
}
