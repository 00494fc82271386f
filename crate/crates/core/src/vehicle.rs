//! Constant-speed linear bicycle model of the host vehicle's lateral motion.
//!
//! Road frame: `y` grows to the right, heading is positive when the vehicle
//! points to the right of the road direction, and a positive steering angle
//! turns right. The model equations are the usual ones with those signs.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::integrate::rk4_step;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub yaw_inertia: f64,
    /// CG to front axle, m.
    pub dist_front: f64,
    /// CG to rear axle, m.
    pub dist_rear: f64,
    /// Front axle cornering stiffness, N/rad.
    pub cornering_stiffness_front: f64,
    /// Rear axle cornering stiffness, N/rad.
    pub cornering_stiffness_rear: f64,
    /// Longitudinal speed, m/s. Fixed for the whole run.
    pub speed: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1830.0,
            yaw_inertia: 3500.0,
            dist_front: 1.40,
            dist_rear: 1.65,
            cornering_stiffness_front: 80_000.0,
            cornering_stiffness_rear: 80_000.0,
            speed: 60.0 / 3.6,
        }
    }
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.dist_front + self.dist_rear
    }

    /// Understeer gradient `K` in s²/m², so that the steady-state yaw rate is
    /// `v·δ / (L·(1 + K·v²))`.
    pub fn understeer_gradient(&self) -> f64 {
        let (cf, cr) = (
            self.cornering_stiffness_front,
            self.cornering_stiffness_rear,
        );
        let l = self.wheelbase();
        self.mass * (self.dist_rear * cr - self.dist_front * cf) / (l * l * cf * cr)
    }

    /// Steady-state yaw rate for a constant front wheel angle.
    pub fn steady_state_yaw_rate(&self, front_wheel_angle: f64) -> f64 {
        let v = self.speed;
        v * front_wheel_angle / (self.wheelbase() * (1.0 + self.understeer_gradient() * v * v))
    }

    /// State matrix of the (body lateral velocity, yaw rate) subsystem.
    pub fn lateral_matrix(&self) -> [[f64; 2]; 2] {
        let (m, iz, a, b, u) = (
            self.mass,
            self.yaw_inertia,
            self.dist_front,
            self.dist_rear,
            self.speed,
        );
        let (cf, cr) = (
            self.cornering_stiffness_front,
            self.cornering_stiffness_rear,
        );
        [
            [-(cf + cr) / (m * u), (b * cr - a * cf) / (m * u) - u],
            [
                (b * cr - a * cf) / (iz * u),
                -(a * a * cf + b * b * cr) / (iz * u),
            ],
        ]
    }

    /// Both eigenvalues of the lateral subsystem have negative real part.
    pub fn is_laterally_stable(&self) -> bool {
        let m = self.lateral_matrix();
        let trace = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        trace < 0.0 && det > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mass,
            self.yaw_inertia,
            self.dist_front,
            self.dist_rear,
            self.cornering_stiffness_front,
            self.cornering_stiffness_rear,
            self.speed,
        ];
        ensure_finite("vehicle parameters", &all)?;
        if all.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter(
                "vehicle parameters must all be positive".into(),
            ));
        }
        if !self.is_laterally_stable() {
            return Err(Error::InvalidParameter(format!(
                "vehicle is laterally unstable at {:.2} m/s",
                self.speed
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Lateral position of the CG in the road frame, m. Positive to the right.
    pub lateral_position: f64,
    /// Road-frame lateral velocity ẏ, m/s.
    pub lateral_velocity: f64,
    /// Heading relative to the road, rad.
    pub heading: f64,
    /// rad/s
    pub yaw_rate: f64,
    /// Distance travelled along the road, m.
    pub station: f64,
    /// Lateral velocity in the body frame, m/s.
    pub body_lateral_velocity: f64,
}

impl VehicleState {
    pub fn at(lateral_position: f64, station: f64) -> Self {
        Self {
            lateral_position,
            station,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleModel {
    pub params: VehicleParams,
    pub steering_ratio: f64,
}

impl VehicleModel {
    pub fn new(params: VehicleParams, steering_ratio: f64) -> Result<Self> {
        params.validate()?;
        if !(steering_ratio > 0.0) {
            return Err(Error::InvalidParameter(
                "steering ratio must be positive".into(),
            ));
        }
        Ok(Self {
            params,
            steering_ratio,
        })
    }

    /// Advances the lateral states by `dt` with the steering wheel angle held.
    pub fn step_vehicle(
        &self,
        state: &VehicleState,
        steering_wheel_angle: f64,
        dt: f64,
    ) -> Result<VehicleState> {
        ensure_finite(
            "vehicle step",
            &[
                state.lateral_position,
                state.body_lateral_velocity,
                state.heading,
                state.yaw_rate,
                state.station,
                steering_wheel_angle,
                dt,
            ],
        )?;
        if dt <= 0.0 {
            return Err(Error::InvalidParameter(
                "vehicle step must be positive".into(),
            ));
        }
        if steering_wheel_angle.abs() >= std::f64::consts::PI {
            return Err(Error::InvalidParameter(format!(
                "steering wheel angle {steering_wheel_angle} rad out of range"
            )));
        }

        let p = &self.params;
        let (m, iz, a, b, u) = (p.mass, p.yaw_inertia, p.dist_front, p.dist_rear, p.speed);
        let (cf, cr) = (p.cornering_stiffness_front, p.cornering_stiffness_rear);
        let delta = steering_wheel_angle / self.steering_ratio;

        // x = [y, v_body, heading, yaw_rate]
        let x = [
            state.lateral_position,
            state.body_lateral_velocity,
            state.heading,
            state.yaw_rate,
        ];
        let next = rk4_step(&x, dt, |x| {
            let (vy, psi, r) = (x[1], x[2], x[3]);
            let fy_front = cf * (delta - (vy + a * r) / u);
            let fy_rear = cr * (-(vy - b * r) / u);
            [
                u * psi.sin() + vy * psi.cos(),
                (fy_front + fy_rear) / m - u * r,
                r,
                (a * fy_front - b * fy_rear) / iz,
            ]
        });

        Ok(VehicleState {
            lateral_position: next[0],
            lateral_velocity: u * next[2].sin() + next[1] * next[2].cos(),
            heading: next[2],
            yaw_rate: next[3],
            station: state.station + u * dt,
            body_lateral_velocity: next[1],
        })
    }
}
