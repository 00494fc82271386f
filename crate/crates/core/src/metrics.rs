//! Trace segmentation into straight and lane-change regions, and the
//! evaluation measures computed over them.
//!
//! A lane-change region starts at the last time |ẏ| rose above
//! `onset_speed` before a marker crossing. It ends where the wheel has come
//! to rest: the start of the first `settle_duration` window, after entering
//! the destination lane's `settle_band`, during which |θ̇| stays below
//! `settle_rate_deg`. Straight regions are the left-lane stretches outside
//! any lane change. All pooling is time weighted, each row standing for the
//! interval up to the next row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road::RoadSpec;
use crate::trace::TraceSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    /// m/s
    pub onset_speed: f64,
    /// m
    pub settle_band: f64,
    /// deg/s
    pub settle_rate_deg: f64,
    /// s
    pub settle_duration: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            onset_speed: 0.1,
            settle_band: 0.5,
            settle_rate_deg: 1.0,
            settle_duration: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SrrParams {
    /// Low-pass corner applied to θ̇ before counting, Hz.
    pub cutoff_hz: f64,
    /// deg/s
    pub deadband_deg: f64,
}

impl Default for SrrParams {
    fn default() -> Self {
        Self {
            cutoff_hz: 2.0,
            deadband_deg: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsParams {
    #[serde(flatten)]
    pub segmentation: SegmentationParams,
    #[serde(flatten)]
    pub srr: SrrParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Straight,
    LaneChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LeftToRight,
    RightToLeft,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub start_time: f64,
    pub end_time: f64,
    pub direction: Direction,
    /// First row of the region.
    pub start_index: usize,
    /// One past the last row of the region.
    pub end_index: usize,
}

impl Region {
    pub fn duration(&self) -> f64 {
        self.end_time - self.start_time
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start_index..self.end_index
    }
}

fn check_time(trace: &[TraceSample]) -> Result<()> {
    for w in trace.windows(2) {
        if !(w[1].time > w[0].time) {
            return Err(Error::NonMonotoneTime {
                last: w[0].time,
                got: w[1].time,
            });
        }
    }
    Ok(())
}

/// Duration each row stands for.
fn row_weights(trace: &[TraceSample]) -> Vec<f64> {
    let n = trace.len();
    let mut w: Vec<f64> = trace.windows(2).map(|p| p[1].time - p[0].time).collect();
    if n >= 2 {
        w.push(w[n - 2]);
    } else if n == 1 {
        w.push(0.0);
    }
    w
}

fn region_end_time(trace: &[TraceSample], weights: &[f64], end_index: usize) -> f64 {
    if end_index < trace.len() {
        trace[end_index].time
    } else {
        trace[end_index - 1].time + weights[end_index - 1]
    }
}

pub fn segment_regions(
    trace: &[TraceSample],
    road: &RoadSpec,
    params: &SegmentationParams,
) -> Result<Vec<Region>> {
    check_time(trace)?;
    if trace.is_empty() {
        return Ok(Vec::new());
    }
    let weights = row_weights(trace);
    let settle_rate = params.settle_rate_deg.to_radians();

    let mut lane_changes: Vec<Region> = Vec::new();
    let mut floor = 0usize;
    let mut i = 1usize;
    while i < trace.len() {
        let was_left = road.in_left_lane(trace[i - 1].y);
        let is_left = road.in_left_lane(trace[i].y);
        if was_left == is_left || i < floor {
            i += 1;
            continue;
        }
        let (direction, destination) = if was_left {
            (Direction::LeftToRight, road.right_center())
        } else {
            (Direction::RightToLeft, road.left_center())
        };

        let mut start = i;
        while start > floor && trace[start - 1].y_dot.abs() > params.onset_speed {
            start -= 1;
        }

        let entered =
            (i..trace.len()).find(|&k| (trace[k].y - destination).abs() < params.settle_band);
        let end = entered.and_then(|k0| {
            let mut k = k0;
            while k < trace.len() {
                if trace[k].theta_dot.abs() >= settle_rate {
                    k += 1;
                    continue;
                }
                let t0 = trace[k].time;
                let mut j = k;
                let mut quiet = true;
                while j < trace.len() && trace[j].time < t0 + params.settle_duration - 1e-9 {
                    if trace[j].theta_dot.abs() >= settle_rate {
                        quiet = false;
                        break;
                    }
                    j += 1;
                }
                if quiet && j < trace.len() {
                    return Some(k);
                }
                if quiet {
                    // Ran out of trace before the window closed.
                    return None;
                }
                k = j + 1;
            }
            None
        });

        match end {
            Some(end) => {
                lane_changes.push(Region {
                    kind: RegionKind::LaneChange,
                    start_time: trace[start].time,
                    end_time: region_end_time(trace, &weights, end),
                    direction,
                    start_index: start,
                    end_index: end,
                });
                floor = end;
                i = end.max(i + 1);
            }
            None => {
                log::warn!(
                    "lane change starting at t = {:.2} s does not settle before the trace ends; dropped",
                    trace[start].time
                );
                break;
            }
        }
    }

    let mut in_lane_change = vec![false; trace.len()];
    for r in &lane_changes {
        for k in r.rows() {
            in_lane_change[k] = true;
        }
    }
    let mut regions = lane_changes;
    let mut k = 0;
    while k < trace.len() {
        if in_lane_change[k] || !road.in_left_lane(trace[k].y) {
            k += 1;
            continue;
        }
        let start = k;
        while k < trace.len() && !in_lane_change[k] && road.in_left_lane(trace[k].y) {
            k += 1;
        }
        regions.push(Region {
            kind: RegionKind::Straight,
            start_time: trace[start].time,
            end_time: region_end_time(trace, &weights, k),
            direction: Direction::None,
            start_index: start,
            end_index: k,
        });
    }
    regions.sort_by_key(|r| r.start_index);
    Ok(regions)
}

fn pooled<'a>(
    regions: impl Iterator<Item = &'a Region>,
    weights: &[f64],
    value: impl Fn(usize) -> f64,
) -> Option<(f64, f64)> {
    let mut sum = 0.0;
    let mut total = 0.0;
    for r in regions {
        for k in r.rows() {
            sum += weights[k] * value(k);
            total += weights[k];
        }
    }
    (total > 0.0).then_some((sum, total))
}

fn of_kind(regions: &[Region], kind: RegionKind) -> impl Iterator<Item = &Region> {
    regions.iter().filter(move |r| r.kind == kind)
}

/// RMS of the distance to the left lane centre over straight regions.
pub fn rms_lateral_error(
    trace: &[TraceSample],
    regions: &[Region],
    road: &RoadSpec,
) -> Option<f64> {
    let w = row_weights(trace);
    let c = road.left_center();
    pooled(of_kind(regions, RegionKind::Straight), &w, |k| {
        (trace[k].y - c).powi(2)
    })
    .map(|(s, t)| (s / t).sqrt())
}

/// RMS of the contact torque over lane-change regions.
pub fn rms_driver_torque(trace: &[TraceSample], regions: &[Region]) -> Option<f64> {
    let w = row_weights(trace);
    pooled(of_kind(regions, RegionKind::LaneChange), &w, |k| {
        trace[k].tau_c.powi(2)
    })
    .map(|(s, t)| (s / t).sqrt())
}

fn max_abs_over<'a>(
    trace: &[TraceSample],
    regions: impl Iterator<Item = &'a Region>,
    value: impl Fn(&TraceSample) -> f64,
) -> Option<f64> {
    regions
        .flat_map(|r| r.rows())
        .map(|k| value(&trace[k]).abs())
        .reduce(f64::max)
}

pub fn max_abs_driver_torque(trace: &[TraceSample], regions: &[Region]) -> Option<f64> {
    max_abs_over(trace, of_kind(regions, RegionKind::LaneChange), |s| s.tau_c)
}

/// Largest |θ| over lane-change regions, degrees.
pub fn max_abs_steering_angle(trace: &[TraceSample], regions: &[Region]) -> Option<f64> {
    max_abs_over(trace, of_kind(regions, RegionKind::LaneChange), |s| s.theta).map(f64::to_degrees)
}

/// Second-order Butterworth low-pass, bilinear transform with prewarping.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    z: [f64; 2],
}

impl Biquad {
    pub fn butterworth_lowpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
        let q = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + q * k + k * k);
        let b0 = k * k * norm;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - q * k + k * k) * norm],
            z: [0.0; 2],
        }
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.z[0];
        self.z[0] = self.b[1] * x - self.a[0] * y + self.z[1];
        self.z[1] = self.b[2] * x - self.a[1] * y;
        y
    }
}

/// Counts sign changes, ignoring values inside the deadband.
pub fn count_sign_changes(values: impl IntoIterator<Item = f64>, deadband: f64) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for v in values {
        let s = if v > deadband {
            1
        } else if v < -deadband {
            -1
        } else {
            continue;
        };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Filtered θ̇ over the whole trace, rad/s.
pub fn filtered_steering_rate(trace: &[TraceSample], params: &SrrParams) -> Vec<f64> {
    if trace.len() < 2 || params.cutoff_hz <= 0.0 {
        return trace.iter().map(|s| s.theta_dot).collect();
    }
    let span = trace[trace.len() - 1].time - trace[0].time;
    let fs = (trace.len() - 1) as f64 / span;
    let mut f = Biquad::butterworth_lowpass(params.cutoff_hz.min(0.45 * fs), fs);
    trace.iter().map(|s| f.process(s.theta_dot)).collect()
}

fn region_reversals(filtered: &[f64], region: &Region, params: &SrrParams) -> usize {
    count_sign_changes(
        filtered[region.rows()].iter().copied(),
        params.deadband_deg.to_radians(),
    )
}

/// Steering reversals per second of lane-change time.
pub fn steering_reversal_rate(
    trace: &[TraceSample],
    regions: &[Region],
    params: &SrrParams,
) -> Option<f64> {
    let filtered = filtered_steering_rate(trace, params);
    let mut count = 0;
    let mut duration = 0.0;
    for r in of_kind(regions, RegionKind::LaneChange) {
        count += region_reversals(&filtered, r, params);
        duration += r.duration();
    }
    (duration > 0.0).then(|| count as f64 / duration)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub region: Region,
    /// Straight regions only, m.
    pub rms_lateral_error: Option<f64>,
    /// Lane-change regions only, N·m.
    pub rms_driver_torque: Option<f64>,
    pub max_abs_driver_torque: Option<f64>,
    /// 1/s
    pub srr: Option<f64>,
    /// deg
    pub max_abs_steering_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// m
    pub rms_lateral_error: Option<f64>,
    /// N·m
    pub rms_driver_torque: Option<f64>,
    /// N·m
    pub max_abs_driver_torque: Option<f64>,
    /// 1/s
    pub srr: Option<f64>,
    /// deg
    pub max_abs_steering_angle: Option<f64>,
    pub lane_change_count: usize,
    pub straight_count: usize,
    pub regions: Vec<RegionMetrics>,
}

impl MetricsReport {
    /// The five headline measures in table order.
    pub fn headline(&self) -> [Option<f64>; 5] {
        [
            self.rms_lateral_error,
            self.rms_driver_torque,
            self.max_abs_driver_torque,
            self.srr,
            self.max_abs_steering_angle,
        ]
    }

    pub const HEADLINE_NAMES: [&'static str; 5] = [
        "RMS(e) [m]",
        "RMS(tau_c) [Nm]",
        "max|tau_c| [Nm]",
        "SRR [1/s]",
        "max|theta| [deg]",
    ];
}

pub fn compute_metrics(
    trace: &[TraceSample],
    road: &RoadSpec,
    params: &MetricsParams,
) -> Result<MetricsReport> {
    let regions = segment_regions(trace, road, &params.segmentation)?;
    let filtered = filtered_steering_rate(trace, &params.srr);
    let per_region = regions
        .iter()
        .map(|r| {
            let one = std::slice::from_ref(r);
            match r.kind {
                RegionKind::Straight => RegionMetrics {
                    region: *r,
                    rms_lateral_error: rms_lateral_error(trace, one, road),
                    rms_driver_torque: None,
                    max_abs_driver_torque: None,
                    srr: None,
                    max_abs_steering_angle: None,
                },
                RegionKind::LaneChange => RegionMetrics {
                    region: *r,
                    rms_lateral_error: None,
                    rms_driver_torque: rms_driver_torque(trace, one),
                    max_abs_driver_torque: max_abs_driver_torque(trace, one),
                    srr: (r.duration() > 0.0)
                        .then(|| region_reversals(&filtered, r, &params.srr) as f64 / r.duration()),
                    max_abs_steering_angle: max_abs_steering_angle(trace, one),
                },
            }
        })
        .collect();
    Ok(MetricsReport {
        rms_lateral_error: rms_lateral_error(trace, &regions, road),
        rms_driver_torque: rms_driver_torque(trace, &regions),
        max_abs_driver_torque: max_abs_driver_torque(trace, &regions),
        srr: steering_reversal_rate(trace, &regions, &params.srr),
        max_abs_steering_angle: max_abs_steering_angle(trace, &regions),
        lane_change_count: regions
            .iter()
            .filter(|r| r.kind == RegionKind::LaneChange)
            .count(),
        straight_count: regions
            .iter()
            .filter(|r| r.kind == RegionKind::Straight)
            .count(),
        regions: per_region,
    })
}
