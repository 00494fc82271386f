//! Target-lane switching and time to line crossing.

use crate::road::RoadSpec;

/// Moves the target lane centre one lane in the direction of lateral motion,
/// clamped to the road's lane centres.
pub fn switch_lane(target: f64, lateral_velocity: f64, road: &RoadSpec) -> f64 {
    let shifted = if lateral_velocity > 0.0 {
        target + road.lane_width
    } else if lateral_velocity < 0.0 {
        target - road.lane_width
    } else {
        target
    };
    road.clamp_center(shifted)
}

/// Time until the CG reaches `marker` at the current lateral velocity,
/// `−(y − y_lm)/ẏ`. Infinite when not moving laterally.
pub fn time_to_line_crossing(y: f64, lateral_velocity: f64, marker: f64) -> f64 {
    if lateral_velocity == 0.0 {
        return f64::INFINITY;
    }
    -(y - marker) / lateral_velocity
}

/// Time to cross the boundary of the target lane that the vehicle is moving
/// toward, together with whether that boundary is the shared marker.
pub fn tlc_to_boundary(y: f64, lateral_velocity: f64, target: f64, road: &RoadSpec) -> (f64, bool) {
    match road.marker_toward(target, lateral_velocity) {
        Some(m) => (
            time_to_line_crossing(y, lateral_velocity, m.position),
            m.shared,
        ),
        None => (f64::INFINITY, false),
    }
}
