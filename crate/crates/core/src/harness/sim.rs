//! The two-rate closed loop: dynamics every `dt`, everything else once per
//! control period.

use crate::driver::{DriverIntent, DriverPhase, SyntheticDriver, TorqueNoise};
use crate::error::{Error, Result};
use crate::scenario::{build_scenario, ScenarioSpec};
use crate::shared_control::{
    pseudo_power, AssistState, LaneKeepingAssist, PowerSample, PseudoWorkEstimate,
};
use crate::steering::{SteeringState, SteeringSystem};
use crate::trace::{format_gaps, TraceSample};
use crate::vehicle::{VehicleModel, VehicleState};

use super::config::RunConfig;

/// Any state magnitude above this aborts the run.
pub const BLOW_UP_LIMIT: f64 = 1e6;

pub struct Simulation {
    config: RunConfig,
    steering_system: SteeringSystem,
    vehicle_model: VehicleModel,
    assist: LaneKeepingAssist,
    driver: SyntheticDriver,
    noise: TorqueNoise,
    scenario: ScenarioSpec,
    substeps: usize,
    step_index: u64,
    vehicle: VehicleState,
    steering: SteeringState,
    assist_state: AssistState,
    work: PseudoWorkEstimate,
    intent: DriverIntent,
    muscle_torque: f64,
    das_torque: f64,
    completed_at: Option<f64>,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let steering_system = SteeringSystem::new(config.steering, config.arm)?;
        let vehicle_model = VehicleModel::new(config.vehicle, config.steering.steering_ratio)?;
        let speed = config.vehicle.speed;
        let assist = LaneKeepingAssist::new(config.assist, config.condition, config.road, speed)?;
        let driver = SyntheticDriver::new(config.driver, speed, config.road)?;
        let noise = TorqueNoise::new(
            config.seed,
            config.driver.noise_std,
            config.driver.noise_cutoff_hz,
            config.control_period,
        );
        let vehicle = VehicleState::at(config.initial_lateral_position, 0.0);
        let start = config.road.nearest_center(vehicle.lateral_position);
        let scenario = build_scenario(config.scenario, vehicle.station, speed, config.road);
        let steering = steering_system.resolve(0.0, 0.0, 0.0, 0.0);
        Ok(Self {
            substeps: config.substeps()?,
            assist_state: assist.initial_state(start),
            work: assist.work_estimate()?,
            intent: DriverIntent {
                target_lane_dr: start,
                ..Default::default()
            },
            config,
            steering_system,
            vehicle_model,
            assist,
            driver,
            noise,
            scenario,
            step_index: 0,
            vehicle,
            steering,
            muscle_torque: 0.0,
            das_torque: 0.0,
            completed_at: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Time of the next control step, s.
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.config.control_period
    }

    pub fn vehicle(&self) -> &VehicleState {
        &self.vehicle
    }

    pub fn steering(&self) -> &SteeringState {
        &self.steering
    }

    pub fn assist_state(&self) -> &AssistState {
        &self.assist_state
    }

    pub fn driver_intent(&self) -> &DriverIntent {
        &self.intent
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    /// Time at which every vehicle had been passed and the driver was back
    /// in the left lane.
    pub fn completed_at(&self) -> Option<f64> {
        self.completed_at
    }

    /// True once the tail after completion has run out or the duration limit
    /// is reached.
    pub fn done(&self) -> bool {
        let t = self.time();
        match self.completed_at {
            Some(c) if t >= c + self.config.tail_time - 1e-9 => true,
            _ => t >= self.config.duration_limit - 1e-9,
        }
    }

    /// Runs one control period and returns the row logged at its start.
    ///
    /// `external_muscle_torque` replaces the synthetic driver's torque when
    /// given.
    pub fn step(&mut self, external_muscle_torque: Option<f64>) -> Result<TraceSample> {
        let t = self.time();
        let period = self.config.control_period;

        let perception = self.scenario.visible_vehicles(&self.vehicle);
        self.intent = self
            .driver
            .decide_lane(&self.intent, &perception, &self.vehicle);
        let muscle_next = match external_muscle_torque {
            Some(torque) => {
                if !torque.is_finite() {
                    return Err(Error::NonFinite("external torque"));
                }
                torque
            }
            None => self.driver.driver_muscle_torque(
                &self.vehicle,
                &self.steering,
                &self.intent,
                &mut self.noise,
            ),
        };

        // What the sensors see now: the torques held over the last period.
        let measured = self.steering_system.resolve(
            self.steering.angle,
            self.steering.angular_velocity,
            self.muscle_torque,
            self.das_torque,
        );
        let ydot = self.vehicle.lateral_velocity;
        let power = PowerSample::new(
            pseudo_power(measured.contact_torque, ydot),
            pseudo_power(self.das_torque, ydot),
            pseudo_power(self.muscle_torque, ydot),
        );
        let work = self.work.update_work(power, t)?;
        let assist =
            self.assist
                .update_assist(&self.assist_state, &self.vehicle, &self.work, period);

        let row = TraceSample {
            time: t,
            station: self.vehicle.station,
            y: self.vehicle.lateral_position,
            y_dot: ydot,
            heading: self.vehicle.heading,
            yaw_rate: self.vehicle.yaw_rate,
            theta: measured.angle,
            theta_dot: measured.angular_velocity,
            theta_ddot: measured.angular_accel,
            tau_c: measured.contact_torque,
            tau_das: self.das_torque,
            tau_msl: self.muscle_torque,
            tau_v: measured.vehicle_torque,
            p_c: power.contact,
            p_das: power.das,
            p_msl: power.muscle,
            w_c: work.contact,
            w_das: work.das,
            w_msl: work.muscle,
            status: assist.state.status,
            gain: assist.state.gain,
            y_d: assist.state.target_lane_center,
            intent: assist.intent_detected,
            switched: assist.switched,
            driver_target: self.intent.target_lane_dr,
            driver_phase: self.intent.phase,
            tlc: assist.tlc,
            ov_gaps: format_gaps(perception.iter().map(|p| p.gap)),
        };

        self.assist_state = assist.state;
        self.muscle_torque = muscle_next;
        self.das_torque = assist.torque;

        let dt = self.config.dt;
        let mut angles = Vec::with_capacity(self.substeps);
        for _ in 0..self.substeps {
            angles.push(self.steering.angle);
            let (next, _) = self.steering_system.step_coupled(
                &self.steering,
                self.muscle_torque,
                self.das_torque,
                dt,
            )?;
            self.steering = next;
        }
        for angle in angles {
            self.vehicle = self.vehicle_model.step_vehicle(&self.vehicle, angle, dt)?;
        }
        self.scenario.step_traffic(&self.vehicle, period);
        self.step_index += 1;
        self.check_blow_up()?;

        if self.completed_at.is_none()
            && self.intent.phase == DriverPhase::KeepLeft
            && self
                .scenario
                .all_passed(self.vehicle.station, self.config.driver.return_clearance)
        {
            self.completed_at = Some(self.time());
        }
        Ok(row)
    }

    fn check_blow_up(&self) -> Result<()> {
        let v = &self.vehicle;
        let s = &self.steering;
        let checks = [
            ("lateral position", v.lateral_position),
            ("lateral velocity", v.lateral_velocity),
            ("heading", v.heading),
            ("yaw rate", v.yaw_rate),
            ("steering angle", s.angle),
            ("steering rate", s.angular_velocity),
            ("assist torque", self.das_torque),
        ];
        for (what, value) in checks {
            if !(value.abs() <= BLOW_UP_LIMIT) {
                return Err(Error::BlowUp {
                    time: self.time(),
                    what,
                    value,
                });
            }
        }
        Ok(())
    }
}
