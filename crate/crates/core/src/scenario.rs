//! Overtaking scenarios on the two-lane road.
//!
//! Scenario A places three single vehicles at 50 km/h with 130 m CG gaps.
//! Scenario B has six groups of three vehicles; group speeds are met in the
//! order 40, 30, 50, 40, 30, 50 km/h. Each B group is spawned ahead of the
//! host once the previous group has dropped out of sight behind it, which
//! keeps the vehicles in station order without any of them overtaking
//! another. The middle vehicle of a B group holds station beside the host
//! while the host drives past the group in the right lane.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road::RoadSpec;
use crate::vehicle::VehicleState;

/// Host distance driven before the first vehicle comes into view, m.
pub const FREE_DRIVE: f64 = 240.0;
/// CG gap between the Scenario A vehicles, m.
pub const SCENARIO_A_GAP: f64 = 130.0;
/// Scenario A vehicle speed, km/h.
pub const SCENARIO_A_SPEED_KMH: f64 = 50.0;
/// Scenario B group speeds in encounter order, km/h.
pub const SCENARIO_B_SPEEDS_KMH: [f64; 6] = [40.0, 30.0, 50.0, 40.0, 30.0, 50.0];
/// Spacing between consecutive members of a Scenario B group, m.
pub const GROUP_SPACING: f64 = 25.0;
/// Gap from the host to the tail of a newly spawned group, m.
pub const SPAWN_GAP: f64 = 200.0;
/// Closest the pacing vehicle gets to the head of its group, m.
pub const PACER_HEADWAY: f64 = 5.0;
/// Visibility range, m. A vehicle is visible when its CG gap is strictly
/// below this.
pub const VISIBILITY_GAP: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[default]
    A,
    B,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::A => f.write_str("A"),
            ScenarioKind::B => f.write_str("B"),
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ScenarioKind::A),
            "B" | "b" => Ok(ScenarioKind::B),
            _ => Err(Error::InvalidParameter(format!("unknown scenario {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvLane {
    Left,
    Right,
    /// Left lane, and allowed to run alongside the host.
    AlongsideLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvStatus {
    /// Not yet placed on the road.
    Pending,
    Active,
    /// Dropped out of sight behind the host; no longer simulated.
    Retired,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtherVehicle {
    pub id: usize,
    pub group_id: u32,
    /// CG station, m. Meaningless while pending.
    pub station: f64,
    pub lane: OvLane,
    /// Current speed, m/s.
    pub speed: f64,
    /// Cruising speed of the vehicle's group, m/s.
    pub nominal_speed: f64,
    /// Distance ahead of the group's tail, m.
    pub offset_in_group: f64,
    pub status: OvStatus,
}

impl OtherVehicle {
    fn lateral_position(&self, road: &RoadSpec) -> f64 {
        match self.lane {
            OvLane::Right => road.right_center(),
            OvLane::Left | OvLane::AlongsideLeft => road.left_center(),
        }
    }
}

/// What the driver sees of another vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perceived {
    pub id: usize,
    pub group_id: u32,
    /// OV station minus host station, m.
    pub gap: f64,
    /// m/s
    pub speed: f64,
    pub lane: OvLane,
    /// Lateral position of the OV, m.
    pub lateral_position: f64,
}

impl Perceived {
    pub fn in_left_lane(&self) -> bool {
        matches!(self.lane, OvLane::Left | OvLane::AlongsideLeft)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub ov_list: Vec<OtherVehicle>,
    pub visibility_gap: f64,
    pub road: RoadSpec,
}

fn kmh(v: f64) -> f64 {
    v / 3.6
}

/// Initial tail station so that the host, starting at `host_start`, drives
/// [`FREE_DRIVE`] metres before the vehicle comes into view.
fn first_encounter_station(host_start: f64, host_speed: f64, ov_speed: f64) -> f64 {
    host_start + VISIBILITY_GAP + FREE_DRIVE * (host_speed - ov_speed) / host_speed
}

pub fn build_scenario(
    kind: ScenarioKind,
    host_start_station: f64,
    host_speed: f64,
    road: RoadSpec,
) -> ScenarioSpec {
    let mut ov_list = Vec::new();
    match kind {
        ScenarioKind::A => {
            let v = kmh(SCENARIO_A_SPEED_KMH);
            let first = first_encounter_station(host_start_station, host_speed, v);
            for k in 0..3 {
                ov_list.push(OtherVehicle {
                    id: k,
                    group_id: k as u32,
                    station: first + SCENARIO_A_GAP * k as f64,
                    lane: OvLane::Left,
                    speed: v,
                    nominal_speed: v,
                    offset_in_group: 0.0,
                    status: OvStatus::Active,
                });
            }
        }
        ScenarioKind::B => {
            for (g, &speed_kmh) in SCENARIO_B_SPEEDS_KMH.iter().enumerate() {
                let v = kmh(speed_kmh);
                let tail = first_encounter_station(host_start_station, host_speed, v);
                for m in 0..3 {
                    let offset = GROUP_SPACING * m as f64;
                    let status = if g == 0 {
                        OvStatus::Active
                    } else {
                        OvStatus::Pending
                    };
                    ov_list.push(OtherVehicle {
                        id: ov_list.len(),
                        group_id: g as u32,
                        station: if g == 0 { tail + offset } else { f64::NAN },
                        lane: if m == 1 {
                            OvLane::AlongsideLeft
                        } else {
                            OvLane::Left
                        },
                        speed: v,
                        nominal_speed: v,
                        offset_in_group: offset,
                        status,
                    });
                }
            }
        }
    }
    ScenarioSpec {
        kind,
        ov_list,
        visibility_gap: VISIBILITY_GAP,
        road,
    }
}

impl ScenarioSpec {
    pub fn groups(&self) -> u32 {
        self.ov_list
            .iter()
            .map(|o| o.group_id + 1)
            .max()
            .unwrap_or(0)
    }

    fn group_bounds(&self, group: u32) -> Option<(f64, f64)> {
        let mut it = self
            .ov_list
            .iter()
            .filter(|o| o.group_id == group && o.status == OvStatus::Active)
            .map(|o| o.station);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s))))
    }

    /// Advances traffic by `dt` given the host state at the start of the step.
    pub fn step_traffic(&mut self, host: &VehicleState, dt: f64) {
        for ov in self
            .ov_list
            .iter_mut()
            .filter(|o| o.status == OvStatus::Active)
        {
            ov.station += ov.nominal_speed * dt;
            ov.speed = ov.nominal_speed;
        }

        let host_in_right_lane = !self.road.in_left_lane(host.lateral_position);
        if host_in_right_lane {
            for i in 0..self.ov_list.len() {
                let ov = self.ov_list[i];
                if ov.lane != OvLane::AlongsideLeft || ov.status != OvStatus::Active {
                    continue;
                }
                let Some((tail, head)) = self.group_bounds(ov.group_id) else {
                    continue;
                };
                if host.station < tail || host.station > head {
                    continue;
                }
                let held = host.station.min(head - PACER_HEADWAY);
                if held > ov.station {
                    let before = ov.station - ov.nominal_speed * dt;
                    let pacer = &mut self.ov_list[i];
                    pacer.station = held;
                    pacer.speed = (held - before) / dt;
                }
            }
        }

        for ov in self
            .ov_list
            .iter_mut()
            .filter(|o| o.status == OvStatus::Active)
        {
            if ov.station <= host.station - self.visibility_gap {
                ov.status = OvStatus::Retired;
            }
        }

        let any_active = self.ov_list.iter().any(|o| o.status == OvStatus::Active);
        if !any_active {
            if let Some(group) = self
                .ov_list
                .iter()
                .find(|o| o.status == OvStatus::Pending)
                .map(|o| o.group_id)
            {
                let tail = host.station + SPAWN_GAP;
                for ov in self.ov_list.iter_mut().filter(|o| o.group_id == group) {
                    ov.station = tail + ov.offset_in_group;
                    ov.status = OvStatus::Active;
                }
            }
        }
    }

    /// Active vehicles whose CG gap to the host is strictly below the
    /// visibility range.
    pub fn visible_vehicles(&self, host: &VehicleState) -> Vec<Perceived> {
        self.ov_list
            .iter()
            .filter(|o| o.status == OvStatus::Active)
            .filter_map(|o| {
                let gap = o.station - host.station;
                (gap.abs() < self.visibility_gap).then(|| Perceived {
                    id: o.id,
                    group_id: o.group_id,
                    gap,
                    speed: o.speed,
                    lane: o.lane,
                    lateral_position: o.lateral_position(&self.road),
                })
            })
            .collect()
    }

    /// Every vehicle has been placed and is at least `clearance` behind the
    /// host.
    pub fn all_passed(&self, host_station: f64, clearance: f64) -> bool {
        self.ov_list.iter().all(|o| match o.status {
            OvStatus::Pending => false,
            OvStatus::Retired => true,
            OvStatus::Active => o.station <= host_station - clearance,
        })
    }

    /// Active vehicles ordered by station.
    pub fn active_stations(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<_> = self
            .ov_list
            .iter()
            .filter(|o| o.status == OvStatus::Active)
            .map(|o| (o.id, o.station))
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }
}
