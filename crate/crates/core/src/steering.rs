//! Steering column coupled to the driver's arm.
//!
//! The driver is assumed to grasp the wheel rigidly, so the column and the arm
//! share a single angle. Summing the column equation
//! `I_str θ̈ + b_str θ̇ = τ_c + τ_das + τ_v` and the arm equation
//! `I_dr θ̈ + b_dr θ̇ = τ_msl − τ_c` eliminates the hand torque; it is then
//! recovered algebraically from the arm equation.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::integrate::rk4_step;

/// Largest integration step accepted by [`SteeringSystem::step_coupled`].
pub const MAX_STEP: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteeringParams {
    /// Moment of inertia of the steering mechanism, kg·m².
    pub inertia_str: f64,
    /// Viscous damping of the steering mechanism, N·m·s/rad.
    pub damping_str: f64,
    /// Self-aligning torque coefficient, N·m/rad.
    pub sat_stiffness: f64,
    /// Steering wheel angle per front wheel angle.
    pub steering_ratio: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self {
            inertia_str: 0.12,
            damping_str: 0.25,
            sat_stiffness: 5.0,
            steering_ratio: 16.0,
        }
    }
}

impl SteeringParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(
            "steering parameters",
            &[
                self.inertia_str,
                self.damping_str,
                self.sat_stiffness,
                self.steering_ratio,
            ],
        )?;
        if self.inertia_str <= 0.0 || self.steering_ratio <= 0.0 {
            return Err(Error::InvalidParameter(
                "steering inertia and ratio must be positive".into(),
            ));
        }
        if self.damping_str < 0.0 || self.sat_stiffness < 0.0 {
            return Err(Error::InvalidParameter(
                "steering damping and SAT stiffness must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmParams {
    /// Moment of inertia of the driver's arm about the steering axis, kg·m².
    pub inertia_dr: f64,
    /// Viscous damping of the arm, N·m·s/rad.
    pub damping_dr: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            inertia_dr: 0.05,
            damping_dr: 0.30,
        }
    }
}

impl ArmParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("arm parameters", &[self.inertia_dr, self.damping_dr])?;
        if self.inertia_dr <= 0.0 || self.damping_dr < 0.0 {
            return Err(Error::InvalidParameter(
                "arm inertia must be positive and damping non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Steering wheel state together with the torques acting at that instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SteeringState {
    /// Steering wheel angle θ, rad. Positive steers right.
    pub angle: f64,
    /// θ̇, rad/s.
    pub angular_velocity: f64,
    /// θ̈ evaluated at this state with the inputs of the last step, rad/s².
    pub angular_accel: f64,
    /// Hand torque τ_c on the wheel, N·m.
    pub contact_torque: f64,
    /// Torque from the vehicle τ_v (self-aligning), N·m.
    pub vehicle_torque: f64,
}

/// Column and arm parameters bundled for integration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SteeringSystem {
    pub steering: SteeringParams,
    pub arm: ArmParams,
}

impl SteeringSystem {
    pub fn new(steering: SteeringParams, arm: ArmParams) -> Result<Self> {
        steering.validate()?;
        arm.validate()?;
        Ok(Self { steering, arm })
    }

    pub fn total_inertia(&self) -> f64 {
        self.steering.inertia_str + self.arm.inertia_dr
    }

    pub fn total_damping(&self) -> f64 {
        self.steering.damping_str + self.arm.damping_dr
    }

    /// Linear self-aligning torque, `τ_v = −k_sat·θ`.
    pub fn self_aligning_torque(&self, state: &SteeringState) -> f64 {
        self.sat_at(state.angle)
    }

    fn sat_at(&self, angle: f64) -> f64 {
        -self.steering.sat_stiffness * angle
    }

    /// Angular acceleration of the rigidly coupled column and arm.
    pub fn acceleration(&self, angle: f64, velocity: f64, muscle: f64, das: f64) -> f64 {
        (muscle + das + self.sat_at(angle) - self.total_damping() * velocity) / self.total_inertia()
    }

    /// Hand torque from the arm equation given the column motion.
    pub fn contact_torque(&self, velocity: f64, accel: f64, muscle: f64) -> f64 {
        muscle - self.arm.inertia_dr * accel - self.arm.damping_dr * velocity
    }

    /// Completes a state from angle and velocity with the given held inputs.
    pub fn resolve(&self, angle: f64, velocity: f64, muscle: f64, das: f64) -> SteeringState {
        let accel = self.acceleration(angle, velocity, muscle, das);
        SteeringState {
            angle,
            angular_velocity: velocity,
            angular_accel: accel,
            contact_torque: self.contact_torque(velocity, accel, muscle),
            vehicle_torque: self.sat_at(angle),
        }
    }

    /// Advances the coupled system by `dt` with the muscle and assist torques
    /// held constant, and returns the new state and the hand torque at its end.
    pub fn step_coupled(
        &self,
        state: &SteeringState,
        muscle_torque: f64,
        das_torque: f64,
        dt: f64,
    ) -> Result<(SteeringState, f64)> {
        ensure_finite(
            "steering step",
            &[
                state.angle,
                state.angular_velocity,
                muscle_torque,
                das_torque,
                dt,
            ],
        )?;
        if dt <= 0.0 || dt > MAX_STEP {
            return Err(Error::InvalidParameter(format!(
                "steering step must lie in (0, {MAX_STEP}] s, got {dt}"
            )));
        }
        let x = [state.angle, state.angular_velocity];
        let next = rk4_step(&x, dt, |x| {
            [
                x[1],
                self.acceleration(x[0], x[1], muscle_torque, das_torque),
            ]
        });
        let out = self.resolve(next[0], next[1], muscle_torque, das_torque);
        Ok((out, out.contact_torque))
    }

    /// Residuals of the column and arm equations for a resolved state.
    pub fn residuals(&self, state: &SteeringState, muscle: f64, das: f64) -> (f64, f64) {
        let col = self.steering.inertia_str * state.angular_accel
            + self.steering.damping_str * state.angular_velocity
            - (state.contact_torque + das + state.vehicle_torque);
        let arm = self.arm.inertia_dr * state.angular_accel
            + self.arm.damping_dr * state.angular_velocity
            - (muscle - state.contact_torque);
        (col, arm)
    }
}
