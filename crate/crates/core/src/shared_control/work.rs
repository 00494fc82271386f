//! Pseudo-power and windowed pseudo-work.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Product of a steering torque and the vehicle's lateral velocity.
///
/// Positive when the torque pushes the way the vehicle is already moving.
pub fn pseudo_power(torque: f64, lateral_velocity: f64) -> f64 {
    torque * lateral_velocity
}

/// One pseudo-power sample for the hand, assist and muscle torques.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub contact: f64,
    pub das: f64,
    pub muscle: f64,
}

impl PowerSample {
    pub fn new(contact: f64, das: f64, muscle: f64) -> Self {
        Self {
            contact,
            das,
            muscle,
        }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.contact, self.das, self.muscle]
    }
}

/// Windowed pseudo-work values, N·m·m/s.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Work {
    pub contact: f64,
    pub das: f64,
    pub muscle: f64,
}

/// Trailing-window mean of the three pseudo-power signals.
///
/// Each work value is `(1/ΔT)·∫ p dt` over `[t − ΔT, t]`, integrated with the
/// trapezoid rule over the stored samples. The segment straddling the window
/// start is clipped by linear interpolation. Before a full window has elapsed
/// the integral starts at the first sample but is still divided by `ΔT`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoWorkEstimate {
    window_length: f64,
    history: VecDeque<(f64, [f64; 3])>,
    work: Work,
}

impl PseudoWorkEstimate {
    pub fn new(window_length: f64) -> Result<Self> {
        if !(window_length > 0.0 && window_length.is_finite()) {
            return Err(Error::InvalidParameter(
                "work window length must be positive".into(),
            ));
        }
        Ok(Self {
            window_length,
            history: VecDeque::new(),
            work: Work::default(),
        })
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn work(&self) -> Work {
        self.work
    }

    /// Number of samples currently held.
    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Time of the most recent sample.
    pub fn last_time(&self) -> Option<f64> {
        self.history.back().map(|(t, _)| *t)
    }

    /// Appends a sample at `time` and recomputes the windowed means.
    pub fn update_work(&mut self, sample: PowerSample, time: f64) -> Result<Work> {
        ensure_finite(
            "work update",
            &[sample.contact, sample.das, sample.muscle, time],
        )?;
        if let Some(last) = self.last_time() {
            if time <= last {
                return Err(Error::NonMonotoneTime { last, got: time });
            }
        }
        self.history.push_back((time, sample.as_array()));

        let start = time - self.window_length;
        // Keep at most one sample at or before the window start.
        while self.history.len() >= 2 && self.history[1].0 <= start {
            self.history.pop_front();
        }

        let mut sum = [0.0; 3];
        for (i, pair) in self
            .history
            .iter()
            .zip(self.history.iter().skip(1))
            .enumerate()
        {
            let (&(t0, p0), &(t1, p1)) = pair;
            let (from, q0) = if i == 0 && t0 < start {
                let f = (start - t0) / (t1 - t0);
                (start, lerp(&p0, &p1, f))
            } else {
                (t0, p0)
            };
            let h = t1 - from;
            for k in 0..3 {
                sum[k] += 0.5 * h * (q0[k] + p1[k]);
            }
        }
        self.work = Work {
            contact: sum[0] / self.window_length,
            das: sum[1] / self.window_length,
            muscle: sum[2] / self.window_length,
        };
        Ok(self.work)
    }
}

fn lerp(a: &[f64; 3], b: &[f64; 3], f: f64) -> [f64; 3] {
    [
        a[0] + f * (b[0] - a[0]),
        a[1] + f * (b[1] - a[1]),
        a[2] + f * (b[2] - a[2]),
    ]
}
