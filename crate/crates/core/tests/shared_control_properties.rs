use coopsteer::road::RoadSpec;
use coopsteer::shared_control::{
    classify, AssistCondition, AssistParams, CooperativeStatus, GainParams, LaneKeepingAssist,
    PowerSample, PseudoWorkEstimate, StatusThresholds,
};
use coopsteer::vehicle::VehicleState;
use proptest::prelude::*;

/// Window average of a piecewise-linear signal, integrated segment by
/// segment over the overlap with `[max(t − window, t0), t]`.
fn reintegrate(times: &[f64], values: &[f64], upto: usize, window: f64) -> f64 {
    let t = times[upto];
    let lo = (t - window).max(times[0]);
    let mut total = 0.0;
    for k in 0..upto {
        let (a, b) = (times[k], times[k + 1]);
        let (s, e) = (a.max(lo), b.min(t));
        if e <= s {
            continue;
        }
        let at = |x: f64| values[k] + (values[k + 1] - values[k]) * (x - a) / (b - a);
        total += 0.5 * (at(s) + at(e)) * (e - s);
    }
    total / window
}

fn random_trace(seed: u64, n: usize, uniform: bool) -> (Vec<f64>, Vec<[f64; 3]>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(t);
        values.push([
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ]);
        t += if uniform {
            0.01
        } else {
            rng.random_range(0.002..0.03)
        };
    }
    (times, values)
}

fn check_against_oracle(seed: u64, uniform: bool) {
    let (times, values) = random_trace(seed, 1000, uniform);
    let mut est = PseudoWorkEstimate::new(1.0).unwrap();
    let channels: Vec<Vec<f64>> = (0..3)
        .map(|c| values.iter().map(|v| v[c]).collect())
        .collect();
    for (k, (&t, v)) in times.iter().zip(&values).enumerate() {
        let w = est
            .update_work(PowerSample::new(v[0], v[1], v[2]), t)
            .unwrap();
        for (c, got) in [w.contact, w.das, w.muscle].into_iter().enumerate() {
            let expect = reintegrate(&times, &channels[c], k, 1.0);
            let err = (got - expect).abs();
            assert!(
                err <= 1e-9 * expect.abs() || err < 1e-15,
                "seed {seed} step {k} channel {c}: {got} vs {expect}"
            );
        }
    }
}

#[test]
fn work_matches_reintegration_on_uniform_traces() {
    for seed in 0..20 {
        check_against_oracle(seed, true);
    }
}

#[test]
fn work_matches_reintegration_on_jittered_traces() {
    for seed in 100..120 {
        check_against_oracle(seed, false);
    }
}

/// Table of the four quadrants with the system-led split on the muscle work.
fn expected_status(w_c: f64, w_das: f64, w_msl: f64) -> CooperativeStatus {
    let driver_initiative = w_c >= -0.2;
    let consistent = w_das >= -0.1;
    match (driver_initiative, consistent) {
        (true, true) => CooperativeStatus::DriverLedCooperative,
        (true, false) => CooperativeStatus::DriverLedUncooperative,
        (false, true) if w_msl >= 0.0 => CooperativeStatus::SystemLedCooperative,
        (false, true) => CooperativeStatus::SystemLedUncooperative,
        (false, false) => CooperativeStatus::Passive,
    }
}

#[test]
fn gain_lag_reaches_dc_within_tenth_of_percent() {
    let assist = LaneKeepingAssist::new(
        AssistParams::default(),
        AssistCondition::Tlc,
        RoadSpec::default(),
        60.0 / 3.6,
    )
    .unwrap();
    for (phi, e, k) in [(0.01, 0.3, 0.5), (-0.02, 0.1, 0.2), (0.0, -1.0, 0.45)] {
        let input = k * (assist.preview_distance() * phi + e);
        let mut x = 0.0;
        let steps = (20.0 * 0.15 / 0.01) as usize;
        for _ in 0..steps {
            x = assist.das_torque(x, phi, e, k, 0.01);
        }
        assert!((x - input).abs() <= 1e-3 * input.abs(), "{x} vs {input}");
    }
}

#[test]
fn tlc_switch_time_matches_constant_velocity_crossing() {
    let assist = LaneKeepingAssist::new(
        AssistParams::default(),
        AssistCondition::Tlc,
        RoadSpec::default(),
        60.0 / 3.6,
    )
    .unwrap();
    for ydot in [0.3, 0.5, 0.8, 1.2] {
        let work = assist.work_estimate().unwrap();
        let mut state = assist.initial_state(0.0);
        let y0 = -0.5;
        // Time at which the marker is 1.5 s away.
        let analytic = (1.5 - y0 - 1.5 * ydot) / ydot;
        let mut switched_at = None;
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            let mut v = VehicleState::at(y0 + ydot * t, 0.0);
            v.lateral_velocity = ydot;
            let step = assist.update_assist(&state, &v, &work, 0.01);
            state = step.state;
            if step.switched {
                switched_at = Some(t);
                break;
            }
        }
        let t = switched_at.expect("never switched");
        assert!(
            t >= analytic - 1e-9 && t - analytic <= 0.01 + 1e-9,
            "{t} vs {analytic}"
        );
        assert_eq!(state.target_lane_center, 3.0);
    }
}

#[test]
fn scripted_resistance_leads_to_switch() {
    // The driver pushes right against the assist for two seconds.
    let assist = LaneKeepingAssist::new(
        AssistParams::default(),
        AssistCondition::GainTuned,
        RoadSpec::default(),
        60.0 / 3.6,
    )
    .unwrap();
    let mut work = assist.work_estimate().unwrap();
    let mut state = assist.initial_state(0.0);
    let mut seen = Vec::new();
    let mut switched = false;
    for k in 0..200 {
        let t = k as f64 * 0.01;
        let ydot = 0.4 * t;
        let mut v = VehicleState::at(0.2 * t * t, 0.0);
        v.lateral_velocity = ydot;
        work.update_work(PowerSample::new(1.0 * ydot, -0.5 * ydot, 1.2 * ydot), t)
            .unwrap();
        let step = assist.update_assist(&state, &v, &work, 0.01);
        if seen.last() != Some(&step.state.status) {
            seen.push(step.state.status);
        }
        if step.switched {
            assert!(step.intent_detected);
            assert!(step.state.gain <= 0.15 + 1e-12);
            switched = true;
            break;
        }
        state = step.state;
    }
    assert!(switched);
    assert_eq!(
        seen,
        vec![
            CooperativeStatus::DriverLedCooperative,
            CooperativeStatus::DriverLedUncooperative
        ]
    );
}

proptest! {
    #[test]
    fn classifier_matches_table(w_c in -2.0f64..2.0, w_das in -2.0f64..2.0, w_msl in -2.0f64..2.0) {
        prop_assert_eq!(
            classify(w_c, w_das, w_msl, &StatusThresholds::default()),
            expected_status(w_c, w_das, w_msl)
        );
    }

    #[test]
    fn agreeing_positive_work_is_state_one(w_c in 0.0f64..5.0, w_das in 0.0f64..5.0, w_msl in -5.0f64..5.0) {
        prop_assert_eq!(
            classify(w_c, w_das, w_msl, &StatusThresholds::default()),
            CooperativeStatus::DriverLedCooperative
        );
    }

    #[test]
    fn raw_gain_bounded_and_increasing(a in -5.0f64..0.5, d in 1e-6f64..1.0) {
        let g = GainParams { smoothing_time: 0.0, ..Default::default() };
        let s = CooperativeStatus::DriverLedUncooperative;
        let (k1, k2) = (g.raw_gain(a, s), g.raw_gain(a + d, s));
        prop_assert!(k1 > 0.0 && k1 < g.k0);
        prop_assert!(k2 > k1);
    }

    #[test]
    fn gain_is_k0_outside_state_two(w in -5.0f64..5.0, idx in 0usize..5, prev in 0.0f64..0.5) {
        let status = CooperativeStatus::ALL[idx];
        prop_assume!(status != CooperativeStatus::DriverLedUncooperative);
        let g = GainParams { smoothing_time: 0.0, ..Default::default() };
        prop_assert_eq!(g.das_gain(w, status, prev, 0.01), g.k0);
    }

    #[test]
    fn work_window_oracle(seed in 0u64..10_000) {
        check_against_oracle(seed, seed % 2 == 0);
    }
}
