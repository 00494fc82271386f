//! Synthetic driver: preview steering with a PD neuromuscular layer, plus an
//! overtaking policy that picks the driver's own target lane.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road::RoadSpec;
use crate::scenario::Perceived;
use crate::steering::SteeringState;
use crate::vehicle::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverParams {
    /// Preview time of the driver's lateral prediction, s. Long enough that a
    /// lane change settles without a visible overshoot.
    pub preview_time_dr: f64,
    /// Desired wheel angle per metre of predicted error, rad/m.
    pub steering_gain_dr: f64,
    /// Arm stiffness about the desired angle, N·m/rad.
    pub neuro_p: f64,
    /// Arm damping, N·m·s/rad.
    pub neuro_d: f64,
    /// N·m
    pub torque_limit: f64,
    /// Standard deviation of the torque noise, N·m.
    pub noise_std: f64,
    /// Corner frequency of the noise shaping filter, Hz. Zero or below gives
    /// white noise drawn independently every control period.
    pub noise_cutoff_hz: f64,
    /// Gap to a slower lead vehicle at which the driver pulls out, m.
    pub overtake_trigger_gap: f64,
    /// How far past the last overtaken vehicle before pulling back in, m.
    pub return_clearance: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            preview_time_dr: 2.4,
            steering_gain_dr: 0.12,
            neuro_p: 60.0,
            neuro_d: 3.0,
            torque_limit: 6.0,
            noise_std: 0.0,
            noise_cutoff_hz: 0.2,
            overtake_trigger_gap: 40.0,
            return_clearance: 15.0,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> Result<()> {
        let gains = [
            self.preview_time_dr,
            self.steering_gain_dr,
            self.neuro_p,
            self.neuro_d,
            self.noise_std,
            self.overtake_trigger_gap,
            self.return_clearance,
        ];
        if gains.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(
                "driver gains, noise and gaps must be finite and non-negative".into(),
            ));
        }
        if !(self.torque_limit > 0.0 && self.torque_limit.is_finite()) {
            return Err(Error::InvalidParameter(
                "torque limit must be positive".into(),
            ));
        }
        if !self.noise_cutoff_hz.is_finite() {
            return Err(Error::NonFinite("noise cutoff"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverPhase {
    #[default]
    KeepLeft,
    Overtaking,
    Returning,
}

impl DriverPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            DriverPhase::KeepLeft => "keep_left",
            DriverPhase::Overtaking => "overtaking",
            DriverPhase::Returning => "returning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverIntent {
    /// m
    pub target_lane_dr: f64,
    pub phase: DriverPhase,
    /// Group being overtaken.
    pub obstruction: Option<u32>,
}

impl Default for DriverIntent {
    fn default() -> Self {
        Self {
            target_lane_dr: 0.0,
            phase: DriverPhase::KeepLeft,
            obstruction: None,
        }
    }
}

/// Gaussian torque noise, optionally shaped by two cascaded first-order
/// low-pass stages. The shaped output is rescaled so that its stationary
/// standard deviation equals `std`.
#[derive(Debug, Clone)]
pub struct TorqueNoise {
    rng: ChaCha8Rng,
    std: f64,
    pole: Option<f64>,
    scale: f64,
    stage1: f64,
    stage2: f64,
}

impl TorqueNoise {
    pub fn new(seed: u64, std: f64, cutoff_hz: f64, period: f64) -> Self {
        let pole =
            (cutoff_hz > 0.0).then(|| (-2.0 * std::f64::consts::PI * cutoff_hz * period).exp());
        let scale = match pole {
            Some(a) => {
                let var = (1.0 - a).powi(4) * (1.0 + a * a) / (1.0 - a * a).powi(3);
                1.0 / var.sqrt()
            }
            None => 1.0,
        };
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            std,
            pole,
            scale,
            stage1: 0.0,
            stage2: 0.0,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if self.std == 0.0 {
            return 0.0;
        }
        let w: f64 = StandardNormal.sample(&mut self.rng);
        match self.pole {
            None => self.std * w,
            Some(a) => {
                self.stage1 = a * self.stage1 + (1.0 - a) * w;
                self.stage2 = a * self.stage2 + (1.0 - a) * self.stage1;
                self.std * self.scale * self.stage2
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticDriver {
    pub params: DriverParams,
    /// Host speed, m/s.
    pub speed: f64,
    pub road: RoadSpec,
}

impl SyntheticDriver {
    pub fn new(params: DriverParams, speed: f64, road: RoadSpec) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            speed,
            road,
        })
    }

    /// Overtaking policy. Pulls out behind a slower lead vehicle and pulls
    /// back in once every visible vehicle of the overtaken group is at least
    /// `return_clearance` behind.
    pub fn decide_lane(
        &self,
        intent: &DriverIntent,
        perception: &[Perceived],
        vehicle: &VehicleState,
    ) -> DriverIntent {
        let p = &self.params;
        match intent.phase {
            DriverPhase::KeepLeft => {
                let lead = perception
                    .iter()
                    .filter(|o| o.in_left_lane() && o.gap > 0.0 && o.speed < self.speed)
                    .min_by(|a, b| a.gap.total_cmp(&b.gap));
                match lead {
                    Some(lead) if lead.gap < p.overtake_trigger_gap => DriverIntent {
                        target_lane_dr: self.road.right_center(),
                        phase: DriverPhase::Overtaking,
                        obstruction: Some(lead.group_id),
                    },
                    _ => *intent,
                }
            }
            DriverPhase::Overtaking => {
                let blocked = perception
                    .iter()
                    .any(|o| Some(o.group_id) == intent.obstruction && o.gap > -p.return_clearance);
                if blocked {
                    *intent
                } else {
                    DriverIntent {
                        target_lane_dr: self.road.left_center(),
                        phase: DriverPhase::Returning,
                        obstruction: None,
                    }
                }
            }
            DriverPhase::Returning => {
                let settled = (vehicle.lateral_position - self.road.left_center()).abs()
                    < self.road.lane_width / 6.0;
                if settled {
                    DriverIntent {
                        phase: DriverPhase::KeepLeft,
                        ..*intent
                    }
                } else {
                    *intent
                }
            }
        }
    }

    /// Desired steering wheel angle from the previewed lateral error, rad.
    pub fn desired_angle(&self, vehicle: &VehicleState, target: f64) -> f64 {
        let p = &self.params;
        p.steering_gain_dr
            * ((target - vehicle.lateral_position)
                - self.speed * p.preview_time_dr * vehicle.heading)
    }

    /// Muscle torque with the given noise sample added before saturation.
    pub fn muscle_torque(
        &self,
        vehicle: &VehicleState,
        steering: &SteeringState,
        intent: &DriverIntent,
        noise: f64,
    ) -> f64 {
        let p = &self.params;
        let theta_d = self.desired_angle(vehicle, intent.target_lane_dr);
        let raw =
            p.neuro_p * (theta_d - steering.angle) - p.neuro_d * steering.angular_velocity + noise;
        raw.clamp(-p.torque_limit, p.torque_limit)
    }

    /// Draws the next noise sample and returns the saturated muscle torque.
    pub fn driver_muscle_torque(
        &self,
        vehicle: &VehicleState,
        steering: &SteeringState,
        intent: &DriverIntent,
        noise: &mut TorqueNoise,
    ) -> f64 {
        let n = noise.sample();
        self.muscle_torque(vehicle, steering, intent, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::OvLane;

    const V: f64 = 60.0 / 3.6;

    fn driver() -> SyntheticDriver {
        SyntheticDriver::new(DriverParams::default(), V, RoadSpec::default()).unwrap()
    }

    fn ov(group_id: u32, gap: f64, kmh: f64) -> Perceived {
        Perceived {
            id: group_id as usize,
            group_id,
            gap,
            speed: kmh / 3.6,
            lane: OvLane::Left,
            lateral_position: 0.0,
        }
    }

    #[test]
    fn zero_error_zero_torque() {
        let d = driver();
        let t = d.muscle_torque(
            &VehicleState::default(),
            &SteeringState::default(),
            &DriverIntent::default(),
            0.0,
        );
        assert_eq!(t, 0.0);
    }

    #[test]
    fn steers_right_toward_right_target() {
        let d = driver();
        let intent = DriverIntent {
            target_lane_dr: 3.0,
            ..Default::default()
        };
        let t = d.muscle_torque(
            &VehicleState::default(),
            &SteeringState::default(),
            &intent,
            0.0,
        );
        assert!(t > 0.0);
    }

    #[test]
    fn saturates() {
        let d = driver();
        let t = d.muscle_torque(
            &VehicleState::default(),
            &SteeringState::default(),
            &DriverIntent::default(),
            100.0,
        );
        assert_eq!(t, 6.0);
    }

    #[test]
    fn no_vehicles_no_change() {
        let d = driver();
        let i = DriverIntent::default();
        assert_eq!(d.decide_lane(&i, &[], &VehicleState::default()), i);
    }

    #[test]
    fn slow_lead_triggers_overtake() {
        let d = driver();
        let i = d.decide_lane(
            &DriverIntent::default(),
            &[ov(0, 35.0, 50.0)],
            &VehicleState::default(),
        );
        assert_eq!(i.phase, DriverPhase::Overtaking);
        assert_eq!(i.target_lane_dr, 3.0);
        assert_eq!(i.obstruction, Some(0));
        // Outside the trigger gap, or not slower: nothing.
        let i = d.decide_lane(
            &DriverIntent::default(),
            &[ov(0, 45.0, 50.0)],
            &VehicleState::default(),
        );
        assert_eq!(i.phase, DriverPhase::KeepLeft);
        let i = d.decide_lane(
            &DriverIntent::default(),
            &[ov(0, 35.0, 70.0)],
            &VehicleState::default(),
        );
        assert_eq!(i.phase, DriverPhase::KeepLeft);
    }

    #[test]
    fn returns_after_clearance() {
        let d = driver();
        let overtaking = DriverIntent {
            target_lane_dr: 3.0,
            phase: DriverPhase::Overtaking,
            obstruction: Some(2),
        };
        let host = VehicleState::at(3.0, 0.0);
        let group = [ov(2, -66.0, 40.0), ov(2, -41.0, 40.0), ov(2, -16.0, 40.0)];
        let i = d.decide_lane(&overtaking, &group, &host);
        assert_eq!(i.phase, DriverPhase::Returning);
        assert_eq!(i.target_lane_dr, 0.0);
        let group = [ov(2, -50.0, 40.0), ov(2, -25.0, 40.0), ov(2, -0.5, 40.0)];
        assert_eq!(d.decide_lane(&overtaking, &group, &host), overtaking);
    }

    #[test]
    fn returning_settles_to_keep_left() {
        let d = driver();
        let returning = DriverIntent {
            target_lane_dr: 0.0,
            phase: DriverPhase::Returning,
            obstruction: None,
        };
        assert_eq!(
            d.decide_lane(&returning, &[], &VehicleState::at(1.0, 0.0)),
            returning
        );
        let i = d.decide_lane(&returning, &[], &VehicleState::at(0.3, 0.0));
        assert_eq!(i.phase, DriverPhase::KeepLeft);
    }

    #[test]
    fn shaped_noise_has_requested_std() {
        let mut n = TorqueNoise::new(7, 0.3, 0.2, 0.01);
        // Let the filter reach steady state.
        for _ in 0..2000 {
            n.sample();
        }
        let samples: Vec<f64> = (0..400_000).map(|_| n.sample()).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / samples.len() as f64;
        assert!((var.sqrt() - 0.3).abs() < 0.03, "std {}", var.sqrt());
    }

    #[test]
    fn white_noise_std_and_reproducibility() {
        let mut a = TorqueNoise::new(3, 0.5, 0.0, 0.01);
        let mut b = TorqueNoise::new(3, 0.5, 0.0, 0.01);
        let xs: Vec<f64> = (0..50_000).map(|_| a.sample()).collect();
        let ys: Vec<f64> = (0..50_000).map(|_| b.sample()).collect();
        assert_eq!(xs, ys);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var.sqrt() - 0.5).abs() < 0.01);
    }
}
