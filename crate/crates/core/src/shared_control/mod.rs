//! Cooperative-status estimation and the status-aware lane-keeping assist.

mod assist;
mod gain;
mod lane;
mod status;
mod work;

pub use assist::{AssistCondition, AssistParams, AssistState, AssistStep, LaneKeepingAssist};
pub use gain::GainParams;
pub use lane::{switch_lane, time_to_line_crossing, tlc_to_boundary};
pub use status::{classify, CooperativeStatus, StatusThresholds};
pub use work::{pseudo_power, PowerSample, PseudoWorkEstimate, Work};
