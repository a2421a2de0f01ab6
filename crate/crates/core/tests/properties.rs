mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stpa_harness::analysis::{
    derive_envelope, discounted_return, penalty, segment_phases, CellSummary, PhaseParams, SweepReport,
};
use stpa_harness::perturb::{
    allocate_replicates, build_grid, perturb_observation, Axis, GridAxis, PerturbationSpec, PilotResult,
};
use stpa_harness::policy::{baseline_act, mlp_act, Activation, BaselineParams, DenseLayer, MlpWeights};
use stpa_harness::sim::{
    lidar_fan, raycast_lidar, step, ControlAction, DroneState, DynamicsParams, Observation, Obstacle, Vec3, WindField,
};
use support::synth::{fly, scenario_with, tree};

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn observation(rays: usize) -> impl Strategy<Value = Observation> {
    (prop::collection::vec(0.001f64..10.0, rays), vec3(20.0), vec3(20.0), vec3(20.0)).prop_map(
        |(lidar_ranges, gps_position, imu_velocity, target_relative)| Observation {
            lidar_ranges,
            gps_position,
            imu_velocity,
            target_relative,
        },
    )
}

fn obstacles() -> impl Strategy<Value = Vec<Obstacle>> {
    prop::collection::vec(
        (-5.0f64..5.0, -5.0f64..5.0, 0.1f64..2.0, 0.1f64..8.0).prop_map(|(x, y, r, h)| Obstacle::tree(x, y, r, h)),
        0..4,
    )
}

fn one_axis_report(rates: &[usize], replicates: usize) -> SweepReport {
    let levels: Vec<f64> = (0..rates.len()).map(|i| i as f64).collect();
    let cells = rates
        .iter()
        .enumerate()
        .map(|(i, &s)| CellSummary::from_counts(i, vec![i], vec![levels[i]], s, replicates).unwrap())
        .collect();
    SweepReport {
        config_hash: String::new(),
        base_seed: 0,
        scenario: "obstacle_avoidance".into(),
        policy: "baseline".into(),
        axes: vec![GridAxis::new(Axis::WindSpeed, levels)],
        cells,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn step_respects_ground_and_speed_limit(
        pos in vec3(10.0),
        vel in vec3(30.0),
        accel in vec3(10.0),
        wind in vec3(18.0),
        seed in any::<u64>(),
    ) {
        let params = DynamicsParams::default();
        let state = DroneState { position: Vec3::new(pos.x, pos.y, pos.z.abs()), velocity: vel, time: 0.0 };
        let action = ControlAction { accel_command: accel }.clamped(params.a_max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = state;
        for _ in 0..20 {
            s = step(&s, &action, &WindField::from_mean(wind), &params, 0.05, &mut rng).unwrap();
            prop_assert!(s.position.z >= 0.0);
            prop_assert!(s.velocity.norm() <= params.v_max + 1e-9);
        }
        prop_assert!((s.time - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lidar_ranges_are_positive_and_bounded(obs in obstacles(), pos in vec3(8.0)) {
        let rays = lidar_fan(36, 2f64.to_radians());
        let p = Vec3::new(pos.x, pos.y, pos.z.abs());
        for r in raycast_lidar(&p, &obs, &rays, 10.0) {
            prop_assert!(r > 0.0 && r <= 10.0);
        }
    }

    #[test]
    fn fog_never_increases_ranges(obs in observation(36), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let thin = perturb_observation(&obs, &PerturbationSpec { fog_density: lo, ..Default::default() }, &mut rng, &[], 10.0, 0);
        let thick = perturb_observation(&obs, &PerturbationSpec { fog_density: hi, ..Default::default() }, &mut rng, &[], 10.0, 0);
        for ((a, b), raw) in thin.lidar_ranges.iter().zip(&thick.lidar_ranges).zip(&obs.lidar_ranges) {
            prop_assert!(b <= a);
            prop_assert!(a <= raw);
        }
    }

    #[test]
    fn occlusion_changes_a_contiguous_block(fraction in 0.0f64..=0.5, start in 0usize..36) {
        let obs = Observation {
            lidar_ranges: vec![1.0; 36],
            gps_position: Vec3::zeros(),
            imu_velocity: Vec3::zeros(),
            target_relative: Vec3::zeros(),
        };
        let spec = PerturbationSpec { occlusion_fraction: fraction, ..Default::default() };
        let out = perturb_observation(&obs, &spec, &mut ChaCha8Rng::seed_from_u64(0), &[], 10.0, start);
        let expected = (fraction * 36.0).floor() as usize;
        let changed: Vec<usize> = (0..36).filter(|&i| out.lidar_ranges[i] != 1.0).collect();
        prop_assert_eq!(changed.len(), expected);
        for k in 0..expected {
            prop_assert_eq!(out.lidar_ranges[(start + k) % 36], 10.0);
        }
    }

    #[test]
    fn grid_length_is_product_of_levels(wind in 1usize..5, noise in 1usize..4, fog in 1usize..4) {
        let ladder = |n: usize, step: f64| (0..n).map(|i| i as f64 * step).collect::<Vec<_>>();
        let axes = [
            GridAxis::new(Axis::WindSpeed, ladder(wind, 4.0)),
            GridAxis::new(Axis::SensorNoiseSigma, ladder(noise, 0.1)),
            GridAxis::new(Axis::FogDensity, ladder(fog, 0.2)),
        ];
        let grid = build_grid(&axes).unwrap();
        prop_assert_eq!(grid.len(), wind * noise * fog);
        for (i, cell) in grid.iter().enumerate() {
            prop_assert_eq!(cell.index, i);
        }
        prop_assert_eq!(build_grid(&axes).unwrap(), grid);
    }

    #[test]
    fn allocation_conserves_budget(
        pilot in prop::collection::vec((2usize..30).prop_flat_map(|n| (0..=n, Just(n))), 1..12),
        min in 0usize..6,
        extra in 0usize..300,
    ) {
        let pilot: Vec<PilotResult> = pilot.into_iter().map(|(s, n)| PilotResult { successes: s, episodes: n }).collect();
        let budget = pilot.len() * min + extra;
        let plan = allocate_replicates(&pilot, budget, min).unwrap();
        prop_assert_eq!(plan.total(), budget);
        prop_assert!(plan.counts.iter().all(|&c| c >= min));
    }

    #[test]
    fn envelope_shrinks_as_threshold_rises(
        rates in prop::collection::vec(0usize..=20, 1..7),
        t1 in 0.01f64..=1.0,
        t2 in 0.01f64..=1.0,
    ) {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let report = one_axis_report(&rates, 20);
        let loose = derive_envelope(&report, lo).unwrap();
        let strict = derive_envelope(&report, hi).unwrap();
        let bound = |e: &stpa_harness::analysis::SafetyEnvelope| e.axes[0].bound.map_or(-1, |b| b as i64);
        prop_assert!(bound(&strict) <= bound(&loose));
        prop_assert!(!loose.empty || strict.empty);
    }

    #[test]
    fn phases_cover_every_step_once(lateral in -4.0f64..4.0, climb in -2.0f64..2.0, steps in 1usize..300) {
        let scenario = scenario_with(vec![tree()]);
        let traj = fly(&scenario, scenario.start, Vec3::new(4.0, 0.0, 0.0), steps, |k, _| {
            if k % 40 < 20 { Vec3::new(0.0, lateral, climb) } else { Vec3::new(0.0, -lateral, -climb) }
        });
        let segments = segment_phases(&traj, &scenario, &PhaseParams::default());
        prop_assert_eq!(segments.first().map(|s| s.start), Some(0));
        prop_assert_eq!(segments.last().map(|s| s.end), Some(traj.len()));
        for w in segments.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
            prop_assert!(w[0].phase != w[1].phase);
        }
        prop_assert!(segments.iter().all(|s| !s.is_empty()));
    }

    #[test]
    fn baseline_respects_a_max(obs in observation(36), a_max in 0.5f64..20.0) {
        let rays = lidar_fan(36, 2f64.to_radians());
        let params = BaselineParams { a_max, ..Default::default() };
        prop_assert!(baseline_act(&obs, &params, &rays).magnitude() <= a_max * (1.0 + 1e-12));
    }

    #[test]
    fn mlp_respects_a_max(obs in observation(4), w in prop::collection::vec(-3.0f64..3.0, 13 * 3 + 3)) {
        let weights = MlpWeights::new(
            vec![13, 3],
            vec![DenseLayer { weights: w[..39].to_vec(), biases: w[39..].to_vec() }],
            Vec::<Activation>::new(),
        ).unwrap();
        prop_assert!(mlp_act(&weights, &obs, 10.0).unwrap().magnitude() <= 10.0 * (1.0 + 1e-12));
    }

    #[test]
    fn penalty_lies_between_minus_five_and_zero(thresh in 0.01f64..2.0, d in 0.0f64..20.0) {
        let p = penalty(thresh, d).unwrap();
        prop_assert!((-5.0..=0.0).contains(&p));
    }

    #[test]
    fn discounted_return_is_linear(
        a in prop::collection::vec(-5.0f64..5.0, 0..50),
        gamma in 0.0f64..=1.0,
        k in -3.0f64..3.0,
    ) {
        let scaled: Vec<f64> = a.iter().map(|r| r * k).collect();
        let lhs = discounted_return(&scaled, gamma);
        let rhs = k * discounted_return(&a, gamma);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }
}
