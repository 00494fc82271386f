//! Per-control-step trace rows and their CSV representation.
//!
//! A row is taken at the start of a control step. The vehicle and steering
//! state are those at `time`; the torques are the ones that were being
//! applied just before `time` (the values the estimator measures), so
//! `theta_ddot`, `tau_c` and `tau_v` satisfy the column and arm balance
//! exactly for the row. The status, gain and target lane are the values
//! decided at `time`; the new assist torque first shows up in the next row.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::DriverPhase;
use crate::error::{Error, Result};
use crate::shared_control::CooperativeStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    /// s
    pub time: f64,
    /// m
    pub station: f64,
    /// Lateral position, positive to the right, m.
    pub y: f64,
    /// m/s
    pub y_dot: f64,
    /// rad
    pub heading: f64,
    /// rad/s
    pub yaw_rate: f64,
    /// Steering wheel angle, rad.
    pub theta: f64,
    /// rad/s
    pub theta_dot: f64,
    /// rad/s²
    pub theta_ddot: f64,
    /// Contact torque between hands and wheel, N·m.
    pub tau_c: f64,
    pub tau_das: f64,
    pub tau_msl: f64,
    /// Self-aligning torque, N·m.
    pub tau_v: f64,
    pub p_c: f64,
    pub p_das: f64,
    pub p_msl: f64,
    pub w_c: f64,
    pub w_das: f64,
    pub w_msl: f64,
    pub status: CooperativeStatus,
    /// Assist gain K.
    pub gain: f64,
    /// Assist target lane centre, m.
    pub y_d: f64,
    /// Lane-change intent detected at this step.
    pub intent: bool,
    /// The assist target lane switched at this step.
    pub switched: bool,
    /// Driver's target lane centre, m.
    pub driver_target: f64,
    pub driver_phase: DriverPhase,
    /// Time to cross the boundary of the assist target lane, s.
    pub tlc: f64,
    /// Semicolon-separated CG gaps of the visible vehicles, m.
    pub ov_gaps: String,
}

impl TraceSample {
    pub fn gaps(&self) -> Vec<f64> {
        self.ov_gaps
            .split(';')
            .filter(|s| !s.is_empty())
            .filter_map(|s| s.parse().ok())
            .collect()
    }
}

pub fn format_gaps(gaps: impl IntoIterator<Item = f64>) -> String {
    gaps.into_iter()
        .map(|g| format!("{g:.3}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceSample>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(rows)
}

pub fn write_trace_file(path: &Path, rows: &[TraceSample]) -> Result<()> {
    let f = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_trace(std::io::BufWriter::new(f), rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceSample>> {
    let f = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trace(std::io::BufReader::new(f))
}
