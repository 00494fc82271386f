//! Haptic shared steering control between a driver and a lane-keeping assist
//! system, with a closed-loop driving simulator to exercise it.
//!
//! The crate is organised around the physical loop:
//!
//! - [`steering`]: coupled steering column and driver arm dynamics, producing
//!   the hand contact torque.
//! - [`vehicle`]: constant-speed linear bicycle model for lateral motion.
//! - [`shared_control`]: pseudo-power/pseudo-work estimation, cooperative
//!   status classification, gain tuning, lane-change intent detection and the
//!   assist torque controller.
//! - [`driver`]: a synthetic preview driver with a PD neuromuscular layer.
//! - [`scenario`]: two-lane road and overtaking traffic.
//! - [`metrics`]: lane-change segmentation and the evaluation measures.
//! - [`harness`]: configuration, the fixed-step simulation loop, batch runs and
//!   trace persistence.

pub mod driver;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod metrics;
pub mod road;
pub mod scenario;
pub mod shared_control;
pub mod steering;
pub mod trace;
pub mod vehicle;

pub use error::{Error, Result};
