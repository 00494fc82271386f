//! Cooperative status between the driver and the assist system.
//!
//! Two axes decide the status: who holds the initiative (sign of the hand
//! pseudo-work against `−γ1²`) and whether the two agents' intents agree (sign
//! of the assist pseudo-work against `−γ2²`). Both comparisons are inclusive
//! on the "driver" / "consistent" side.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatusThresholds {
    /// γ1², offset on the hand pseudo-work.
    pub gamma1_sq: f64,
    /// γ2², offset on the assist pseudo-work.
    pub gamma2_sq: f64,
}

impl Default for StatusThresholds {
    fn default() -> Self {
        Self {
            gamma1_sq: 0.2,
            gamma2_sq: 0.1,
        }
    }
}

impl StatusThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1_sq >= 0.0 && self.gamma2_sq >= 0.0) {
            return Err(Error::InvalidParameter(
                "status thresholds must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CooperativeStatus {
    /// Driver-led cooperative.
    #[default]
    #[serde(rename = "I")]
    DriverLedCooperative,
    /// Driver-led uncooperative: the driver resists the assist.
    #[serde(rename = "II")]
    DriverLedUncooperative,
    /// System-led, the driver follows the guidance.
    #[serde(rename = "III-a")]
    SystemLedCooperative,
    /// System-led, the driver resists the guidance.
    #[serde(rename = "III-b")]
    SystemLedUncooperative,
    /// Neither agent is actively driving the motion.
    #[serde(rename = "IV")]
    Passive,
}

impl CooperativeStatus {
    pub const ALL: [CooperativeStatus; 5] = [
        CooperativeStatus::DriverLedCooperative,
        CooperativeStatus::DriverLedUncooperative,
        CooperativeStatus::SystemLedCooperative,
        CooperativeStatus::SystemLedUncooperative,
        CooperativeStatus::Passive,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            CooperativeStatus::DriverLedCooperative => "I",
            CooperativeStatus::DriverLedUncooperative => "II",
            CooperativeStatus::SystemLedCooperative => "III-a",
            CooperativeStatus::SystemLedUncooperative => "III-b",
            CooperativeStatus::Passive => "IV",
        }
    }

    pub fn driver_has_initiative(&self) -> bool {
        matches!(
            self,
            CooperativeStatus::DriverLedCooperative | CooperativeStatus::DriverLedUncooperative
        )
    }

    pub fn is_system_led(&self) -> bool {
        matches!(
            self,
            CooperativeStatus::SystemLedCooperative | CooperativeStatus::SystemLedUncooperative
        )
    }
}

impl fmt::Display for CooperativeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CooperativeStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CooperativeStatus::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown cooperative status {s:?}")))
    }
}

/// Classifies the pseudo-work triple into a cooperative status.
///
/// The muscle pseudo-work only splits the system-led cell.
pub fn classify(
    work_contact: f64,
    work_das: f64,
    work_muscle: f64,
    thresholds: &StatusThresholds,
) -> CooperativeStatus {
    let driver_initiative = work_contact >= -thresholds.gamma1_sq;
    let das_consistent = work_das >= -thresholds.gamma2_sq;
    match (driver_initiative, das_consistent) {
        (true, true) => CooperativeStatus::DriverLedCooperative,
        (true, false) => CooperativeStatus::DriverLedUncooperative,
        (false, true) if work_muscle >= 0.0 => CooperativeStatus::SystemLedCooperative,
        (false, true) => CooperativeStatus::SystemLedUncooperative,
        (false, false) => CooperativeStatus::Passive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CooperativeStatus::*;

    #[test]
    fn table_cells() {
        let th = StatusThresholds::default();
        assert_eq!(classify(0.5, 0.3, 0.0, &th), DriverLedCooperative);
        assert_eq!(classify(0.5, -0.5, 0.0, &th), DriverLedUncooperative);
        assert_eq!(classify(-0.5, 0.3, 0.1, &th), SystemLedCooperative);
        assert_eq!(classify(-0.5, 0.3, -0.1, &th), SystemLedUncooperative);
        assert_eq!(classify(-0.5, -0.5, 0.0, &th), Passive);
    }

    #[test]
    fn boundaries_are_inclusive() {
        let th = StatusThresholds::default();
        // w_c = −γ1² still counts as driver initiative.
        assert_eq!(classify(-0.2, 0.3, 0.1, &th), DriverLedCooperative);
        assert_eq!(classify(0.0, -0.1, 0.0, &th), DriverLedCooperative);
        assert_eq!(classify(0.0, -0.11, 0.0, &th), DriverLedUncooperative);
        assert_eq!(classify(-0.21, -0.1, 0.0, &th), SystemLedCooperative);
    }

    #[test]
    fn labels_round_trip() {
        for s in CooperativeStatus::ALL {
            assert_eq!(s.label().parse::<CooperativeStatus>().unwrap(), s);
            assert_eq!(
                serde_json::to_string(&s).unwrap(),
                format!("\"{}\"", s.label())
            );
        }
        assert!("V".parse::<CooperativeStatus>().is_err());
    }
}
