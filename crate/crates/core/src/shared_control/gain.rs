//! Status-dependent assist gain and lane-change intent detection.

use serde::{Deserialize, Serialize};

use super::status::CooperativeStatus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainParams {
    /// Base gain K0, N·m per m of preview error.
    pub k0: f64,
    /// Sigmoid slope `a`.
    pub slope: f64,
    /// Sigmoid offset `b`.
    pub offset: f64,
    /// δ²: intent is detected once the gain falls to `δ²·K0`.
    pub intent_fraction: f64,
    /// Time constant of the first-order lag applied to the gain, s. Zero
    /// applies the sigmoid directly.
    pub smoothing_time: f64,
}

impl Default for GainParams {
    fn default() -> Self {
        Self {
            k0: 0.5,
            slope: 10.0,
            offset: 0.4,
            intent_fraction: 0.3,
            smoothing_time: 0.2,
        }
    }
}

impl GainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0 && self.slope > 0.0) {
            return Err(Error::InvalidParameter(
                "k0 and slope must be positive".into(),
            ));
        }
        if !(self.intent_fraction > 0.0 && self.intent_fraction < 1.0) {
            return Err(Error::InvalidParameter(
                "intent fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.smoothing_time >= 0.0) || !self.offset.is_finite() {
            return Err(Error::InvalidParameter(
                "gain smoothing time must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Sigmoid gain in the driver-resisting state, `K0` otherwise.
    pub fn raw_gain(&self, work_das: f64, status: CooperativeStatus) -> f64 {
        match status {
            CooperativeStatus::DriverLedUncooperative => {
                self.k0 / (1.0 + (-self.slope * work_das + self.offset).exp())
            }
            _ => self.k0,
        }
    }

    /// Gain for the next control period.
    ///
    /// With a non-zero smoothing time the raw gain is passed through an
    /// exactly discretised first-order lag starting from `previous`.
    pub fn das_gain(
        &self,
        work_das: f64,
        status: CooperativeStatus,
        previous: f64,
        dt: f64,
    ) -> f64 {
        let raw = self.raw_gain(work_das, status);
        if self.smoothing_time <= 0.0 {
            return raw;
        }
        let decay = (-dt / self.smoothing_time).exp();
        raw + (previous - raw) * decay
    }

    /// Lane-change intent: the gain has dropped to `δ²·K0` or below.
    pub fn detect_intent(&self, gain: f64) -> bool {
        gain <= self.intent_fraction * self.k0
    }
}
