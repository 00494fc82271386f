use coopsteer::driver::DriverPhase;
use coopsteer::metrics::{
    compute_metrics, count_sign_changes, max_abs_driver_torque, max_abs_steering_angle,
    rms_driver_torque, rms_lateral_error, segment_regions, steering_reversal_rate, Direction,
    MetricsParams, Region, RegionKind, SegmentationParams, SrrParams,
};
use coopsteer::road::RoadSpec;
use coopsteer::shared_control::CooperativeStatus;
use coopsteer::trace::TraceSample;
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2};

fn blank(time: f64) -> TraceSample {
    TraceSample {
        time,
        station: 0.0,
        y: 0.0,
        y_dot: 0.0,
        heading: 0.0,
        yaw_rate: 0.0,
        theta: 0.0,
        theta_dot: 0.0,
        theta_ddot: 0.0,
        tau_c: 0.0,
        tau_das: 0.0,
        tau_msl: 0.0,
        tau_v: 0.0,
        p_c: 0.0,
        p_das: 0.0,
        p_msl: 0.0,
        w_c: 0.0,
        w_das: 0.0,
        w_msl: 0.0,
        status: CooperativeStatus::DriverLedCooperative,
        gain: 0.5,
        y_d: 0.0,
        intent: false,
        switched: false,
        driver_target: 0.0,
        driver_phase: DriverPhase::KeepLeft,
        tlc: f64::INFINITY,
        ov_gaps: String::new(),
    }
}

/// Minimum-jerk blend from 0 to 1 and its first three derivatives in τ.
fn min_jerk(tau: f64) -> [f64; 4] {
    if tau <= 0.0 {
        return [0.0; 4];
    }
    if tau >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let (t2, t3) = (tau * tau, tau * tau * tau);
    [
        10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2,
        30.0 * t2 - 60.0 * t3 + 30.0 * t3 * tau,
        60.0 * tau - 180.0 * t2 + 120.0 * t3,
        60.0 - 360.0 * tau + 360.0 * t2,
    ]
}

/// Left lane until 10 s, over to the right lane in 5 s, back at 25 s, then
/// left again until 40 s. The wheel angle follows the lateral acceleration.
fn double_maneuver(dt: f64) -> Vec<TraceSample> {
    let n = (40.0 / dt).round() as usize;
    let span = 5.0;
    (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let out = min_jerk((t - 10.0) / span);
            let back = min_jerk((t - 25.0) / span);
            let mut s = blank(t);
            s.y = 3.0 * (out[0] - back[0]) + 0.05 * (0.3 * t).sin();
            s.y_dot = 3.0 * (out[1] - back[1]) / span + 0.015 * (0.3 * t).cos();
            s.theta = 0.8 * (out[2] - back[2]) / (span * span);
            s.theta_dot = 0.8 * (out[3] - back[3]) / (span * span * span);
            s.tau_c = 0.4 * (2.0 * PI * 0.4 * t).sin() + 0.1;
            s
        })
        .collect()
}

fn region(
    kind: RegionKind,
    start: usize,
    end: usize,
    trace: &[TraceSample],
    end_time: f64,
) -> Region {
    Region {
        kind,
        start_time: trace[start].time,
        end_time,
        direction: Direction::None,
        start_index: start,
        end_index: end,
    }
}

#[test]
fn double_maneuver_gives_two_opposite_lane_changes() {
    let trace = double_maneuver(0.01);
    let regions =
        segment_regions(&trace, &RoadSpec::default(), &SegmentationParams::default()).unwrap();
    let changes: Vec<&Region> = regions
        .iter()
        .filter(|r| r.kind == RegionKind::LaneChange)
        .collect();
    assert_eq!(changes.len(), 2);
    assert_eq!(changes[0].direction, Direction::LeftToRight);
    assert_eq!(changes[1].direction, Direction::RightToLeft);
    // Onset where the lateral speed first exceeds 0.1 m/s, settled by the
    // time the manoeuvre has finished.
    assert!(changes[0].start_time > 10.0 && changes[0].start_time < 11.5);
    assert!(changes[0].end_time > 14.0 && changes[0].end_time < 15.6);
    // Straight stretches only in the left lane, never overlapping.
    let mut sorted = regions.clone();
    sorted.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));
    for w in sorted.windows(2) {
        assert!(w[0].end_index <= w[1].start_index);
    }
    for r in regions.iter().filter(|r| r.kind == RegionKind::Straight) {
        for k in r.rows() {
            assert!(trace[k].y < 1.5);
        }
    }
    assert_eq!(
        regions
            .iter()
            .filter(|r| r.kind == RegionKind::Straight)
            .count(),
        2
    );
}

#[test]
fn left_lane_partition_is_complete() {
    // Every left-lane row belongs to exactly one region.
    let trace = double_maneuver(0.01);
    let regions =
        segment_regions(&trace, &RoadSpec::default(), &SegmentationParams::default()).unwrap();
    for (k, s) in trace.iter().enumerate() {
        let owners = regions.iter().filter(|r| r.rows().contains(&k)).count();
        if s.y < 1.5 {
            assert_eq!(owners, 1, "row {k} at t = {}", s.time);
        } else {
            assert!(owners <= 1);
        }
    }
}

#[test]
fn constant_left_lane_is_one_straight_region() {
    let trace: Vec<TraceSample> = (0..1000).map(|k| blank(k as f64 * 0.01)).collect();
    let regions =
        segment_regions(&trace, &RoadSpec::default(), &SegmentationParams::default()).unwrap();
    assert_eq!(regions.len(), 1);
    assert_eq!(regions[0].kind, RegionKind::Straight);
    assert_eq!(regions[0].rows(), 0..1000);
}

#[test]
fn right_lane_cruise_has_no_straight_region() {
    let trace: Vec<TraceSample> = (0..1000)
        .map(|k| {
            let mut s = blank(k as f64 * 0.01);
            s.y = 3.0;
            s
        })
        .collect();
    let regions =
        segment_regions(&trace, &RoadSpec::default(), &SegmentationParams::default()).unwrap();
    assert!(regions.is_empty());
    let report = compute_metrics(&trace, &RoadSpec::default(), &MetricsParams::default()).unwrap();
    assert_eq!(report.rms_lateral_error, None);
    assert_eq!(report.srr, None);
}

#[test]
fn truncated_manoeuvre_is_dropped() {
    let mut trace = double_maneuver(0.01);
    trace.truncate((13.0 / 0.01) as usize);
    let regions =
        segment_regions(&trace, &RoadSpec::default(), &SegmentationParams::default()).unwrap();
    assert!(regions.iter().all(|r| r.kind == RegionKind::Straight));
}

#[test]
fn non_monotone_time_rejected() {
    let trace = vec![blank(0.0), blank(0.02), blank(0.01)];
    assert!(segment_regions(&trace, &RoadSpec::default(), &SegmentationParams::default()).is_err());
}

#[test]
fn rms_of_constant_and_sinusoidal_error() {
    let road = RoadSpec::default();
    let constant: Vec<TraceSample> = (0..500)
        .map(|k| {
            let mut s = blank(k as f64 * 0.01);
            s.y = 0.2;
            s
        })
        .collect();
    let all = [region(RegionKind::Straight, 0, 500, &constant, 5.0)];
    assert!((rms_lateral_error(&constant, &all, &road).unwrap() - 0.2).abs() < 1e-12);

    // Four whole periods of a 0.5 Hz sinusoid.
    let n = 800;
    let sine: Vec<TraceSample> = (0..n)
        .map(|k| {
            let t = k as f64 * 0.01;
            let mut s = blank(t);
            s.y = 0.3 * (PI * t).sin();
            s
        })
        .collect();
    let all = [region(RegionKind::Straight, 0, n, &sine, 8.0)];
    let rms = rms_lateral_error(&sine, &all, &road).unwrap();
    assert!((rms - 0.3 / SQRT_2).abs() < 1e-9, "{rms}");
}

#[test]
fn torque_measures() {
    // τ_c ≡ 0.5
    let flat: Vec<TraceSample> = (0..200)
        .map(|k| {
            let mut s = blank(k as f64 * 0.01);
            s.tau_c = 0.5;
            s
        })
        .collect();
    let r = [region(RegionKind::LaneChange, 0, 200, &flat, 2.0)];
    assert!((rms_driver_torque(&flat, &r).unwrap() - 0.5).abs() < 1e-12);
    assert!((max_abs_driver_torque(&flat, &r).unwrap() - 0.5).abs() < 1e-12);

    // Two equal-length regions at 0.3 and 0.4 pool to √((0.09 + 0.16)/2).
    let two: Vec<TraceSample> = (0..400)
        .map(|k| {
            let mut s = blank(k as f64 * 0.01);
            s.tau_c = if k < 200 { 0.3 } else { -0.4 };
            s
        })
        .collect();
    let r = [
        region(RegionKind::LaneChange, 0, 200, &two, 2.0),
        region(RegionKind::LaneChange, 200, 400, &two, 4.0),
    ];
    let pooled = rms_driver_torque(&two, &r).unwrap();
    assert!((pooled - 0.3536).abs() < 1e-4, "{pooled}");
    assert!((pooled - (0.125f64).sqrt()).abs() < 1e-12);

    // Triangular pulse with its apex on a sample.
    let tri: Vec<TraceSample> = (0..=200)
        .map(|k| {
            let mut s = blank(k as f64 * 0.01);
            s.tau_c = 1.5 * (1.0 - (k as f64 - 100.0).abs() / 100.0);
            s
        })
        .collect();
    let r = [region(RegionKind::LaneChange, 0, 201, &tri, 2.01)];
    assert_eq!(max_abs_driver_torque(&tri, &r).unwrap(), 1.5);
    assert!(max_abs_driver_torque(&tri, &r).unwrap() >= rms_driver_torque(&tri, &r).unwrap());
}

#[test]
fn steering_angle_in_degrees() {
    let mut trace: Vec<TraceSample> = (0..100).map(|k| blank(k as f64 * 0.01)).collect();
    let r = [region(RegionKind::LaneChange, 0, 100, &trace, 1.0)];
    assert_eq!(max_abs_steering_angle(&trace, &r).unwrap(), 0.0);
    trace[40].theta = -0.2;
    trace[41].theta = 0.15;
    let deg = max_abs_steering_angle(&trace, &r).unwrap();
    assert!((deg - 11.46).abs() < 0.01, "{deg}");
}

#[test]
fn reversal_counting() {
    let raw = SrrParams {
        cutoff_hz: 0.0,
        ..Default::default()
    };
    let signs = [1.0, 1.0, -1.0, -1.0, 1.0];
    let trace: Vec<TraceSample> = signs
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut s = blank(k as f64 * 0.4);
            s.theta_dot = 0.1 * v;
            s
        })
        .collect();
    let r = [region(RegionKind::LaneChange, 0, 5, &trace, 2.0)];
    assert_eq!(steering_reversal_rate(&trace, &r, &raw), Some(1.0));

    let monotone: Vec<TraceSample> = (0..300)
        .map(|k| {
            let mut s = blank(k as f64 * 0.01);
            s.theta_dot = 0.05;
            s
        })
        .collect();
    let r = [region(RegionKind::LaneChange, 0, 300, &monotone, 3.0)];
    assert_eq!(
        steering_reversal_rate(&monotone, &r, &SrrParams::default()),
        Some(0.0)
    );

    // Values inside the deadband never count.
    assert_eq!(count_sign_changes([0.01, -0.01, 0.01, 2.0, -2.0], 0.1), 1);
}

#[test]
fn sinusoidal_rate_gives_two_reversals_per_second() {
    // A 1 Hz cosine crosses zero at 0.25, 0.75, ... s: six times in 3 s.
    let n = 3000;
    let trace: Vec<TraceSample> = (0..n)
        .map(|k| {
            let t = k as f64 * 0.001;
            let mut s = blank(t);
            s.theta_dot = 0.2 * (2.0 * PI * t).cos();
            s
        })
        .collect();
    let r = [region(RegionKind::LaneChange, 0, n, &trace, 3.0)];
    let srr = steering_reversal_rate(&trace, &r, &SrrParams::default()).unwrap();
    assert!((srr - 2.0).abs() < 1e-12, "{srr}");
}

#[test]
fn metrics_survive_resampling() {
    let road = RoadSpec::default();
    let params = MetricsParams::default();
    let fine = double_maneuver(0.001);
    let coarse: Vec<TraceSample> = fine.iter().step_by(2).cloned().collect();
    let a = compute_metrics(&fine, &road, &params).unwrap();
    let b = compute_metrics(&coarse, &road, &params).unwrap();
    assert_eq!(a.lane_change_count, 2);
    assert_eq!(b.lane_change_count, 2);
    for (name, (x, y)) in coopsteer::metrics::MetricsReport::HEADLINE_NAMES
        .iter()
        .zip(a.headline().into_iter().zip(b.headline()))
    {
        let (x, y) = (x.unwrap(), y.unwrap());
        assert!(
            (x - y).abs() <= 0.01 * x.abs().max(1e-9),
            "{name}: {x} vs {y}"
        );
    }
}

proptest! {
    #[test]
    fn zero_error_interval_never_raises_rms(
        extra in 1usize..500,
        amp in 0.01f64..1.0,
        n in 10usize..300,
    ) {
        let road = RoadSpec::default();
        let mut trace: Vec<TraceSample> = (0..n)
            .map(|k| {
                let t = k as f64 * 0.01;
                let mut s = blank(t);
                s.y = amp * (3.0 * t).sin();
                s
            })
            .collect();
        let base = [region(RegionKind::Straight, 0, n, &trace, n as f64 * 0.01)];
        let before = rms_lateral_error(&trace, &base, &road).unwrap();
        for k in 0..extra {
            trace.push(blank((n + k) as f64 * 0.01));
        }
        let total = n + extra;
        let grown = [region(RegionKind::Straight, 0, total, &trace, total as f64 * 0.01)];
        let after = rms_lateral_error(&trace, &grown, &road).unwrap();
        prop_assert!(after <= before + 1e-15);
    }

    #[test]
    fn reports_are_non_negative(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut trace = double_maneuver(0.01);
        for s in &mut trace {
            s.tau_c += rng.random_range(-0.5..0.5);
            s.theta_dot += rng.random_range(-0.01..0.01);
        }
        let report = compute_metrics(&trace, &RoadSpec::default(), &MetricsParams::default()).unwrap();
        for v in report.headline().into_iter().flatten() {
            prop_assert!(v >= 0.0);
        }
        if let (Some(max), Some(rms)) = (report.max_abs_driver_torque, report.rms_driver_torque) {
            prop_assert!(max >= rms);
        }
    }
}
