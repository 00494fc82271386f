//! Straight two-lane, one-way road geometry.
//!
//! The left lane is centred on `y = 0` and the right lane on `y = lane_width`.
//! The shared marker sits halfway between them; the outer markers are the
//! road edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadSpec {
    /// m
    pub lane_width: f64,
}

impl Default for RoadSpec {
    fn default() -> Self {
        Self { lane_width: 3.0 }
    }
}

/// A lane marker and whether crossing it leads into the other lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub position: f64,
    pub shared: bool,
}

impl RoadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lane_width > 0.0 && self.lane_width.is_finite()) {
            return Err(Error::InvalidParameter(
                "lane width must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn left_center(&self) -> f64 {
        0.0
    }

    pub fn right_center(&self) -> f64 {
        self.lane_width
    }

    pub fn lane_centers(&self) -> [f64; 2] {
        [self.left_center(), self.right_center()]
    }

    /// The marker between the two lanes.
    pub fn shared_marker(&self) -> f64 {
        0.5 * self.lane_width
    }

    pub fn left_edge(&self) -> f64 {
        -0.5 * self.lane_width
    }

    pub fn right_edge(&self) -> f64 {
        1.5 * self.lane_width
    }

    /// True when `y` lies left of the shared marker.
    pub fn in_left_lane(&self, y: f64) -> bool {
        y < self.shared_marker()
    }

    /// Nearest lane centre to `y`.
    pub fn nearest_center(&self, y: f64) -> f64 {
        if self.in_left_lane(y) {
            self.left_center()
        } else {
            self.right_center()
        }
    }

    /// Boundary marker of the lane centred on `target` that lies in the
    /// direction of `lateral_velocity`. `None` when not moving laterally.
    pub fn marker_toward(&self, target: f64, lateral_velocity: f64) -> Option<Marker> {
        let half = 0.5 * self.lane_width;
        let position = if lateral_velocity > 0.0 {
            target + half
        } else if lateral_velocity < 0.0 {
            target - half
        } else {
            return None;
        };
        let shared = (position - self.shared_marker()).abs() < 1e-9 * self.lane_width;
        Some(Marker { position, shared })
    }

    /// Clamps a lateral target onto the valid lane-centre range.
    pub fn clamp_center(&self, target: f64) -> f64 {
        target.clamp(self.left_center(), self.right_center())
    }
}
