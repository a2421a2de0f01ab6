//! Hand-built trajectories with prescribed accelerations, bypassing the
//! simulator's drag and perturbation layers.

use stpa_harness::analysis::{penalty, StepRecord, Trajectory};
use stpa_harness::sim::{
    make_scenario, min_separation, raycast_lidar, ControlAction, DroneState, Observation, Obstacle, ObstacleLayout,
    ScenarioParams, ScenarioSpec, SubtaskKind, Vec2, Vec3,
};

pub fn tree() -> Obstacle {
    Obstacle::tree(0.0, 0.0, 0.5, 10.0)
}

pub fn cluster() -> Vec<Obstacle> {
    let params = ScenarioParams { layout: ObstacleLayout::ThreeTreeCluster, ..Default::default() };
    make_scenario(SubtaskKind::ObstacleAvoidance, &params).unwrap().obstacles
}

/// The default obstacle-avoidance scenario with the given obstacles.
pub fn scenario_with(obstacles: Vec<Obstacle>) -> ScenarioSpec {
    let mut s = make_scenario(SubtaskKind::ObstacleAvoidance, &ScenarioParams::default()).unwrap();
    s.obstacles = obstacles;
    s
}

/// Unit vector 90° counter-clockwise from the horizontal velocity.
pub fn left_of(state: &DroneState) -> Vec3 {
    let v = Vec2::new(state.velocity.x, state.velocity.y);
    let n = v.norm();
    if n == 0.0 {
        Vec3::zeros()
    } else {
        Vec3::new(-v.y / n, v.x / n, 0.0)
    }
}

/// Integrates `v += a·dt, p += v·dt` from `start`, recording each step as
/// the episode runner would, and stops after the first contact.
pub fn fly(
    scenario: &ScenarioSpec,
    start: Vec3,
    v0: Vec3,
    steps: usize,
    mut accel: impl FnMut(usize, &DroneState) -> Vec3,
) -> Trajectory {
    let rays = scenario.lidar.rays();
    let dt = scenario.dt;
    let mut state = DroneState { position: start, velocity: v0, time: 0.0 };
    let initial = state;
    let mut records = Vec::new();
    for k in 0..steps {
        let here: Vec<Obstacle> = scenario.obstacles.iter().map(|o| o.at_time(state.time)).collect();
        let observation = Observation {
            lidar_ranges: raycast_lidar(&state.position, &here, &rays, scenario.lidar.max_range),
            gps_position: state.position,
            imu_velocity: state.velocity,
            target_relative: scenario.target - state.position,
        };
        let a = accel(k, &state);
        state.velocity += a * dt;
        state.position += state.velocity * dt;
        state.time = (k + 1) as f64 * dt;

        let here: Vec<Obstacle> = scenario.obstacles.iter().map(|o| o.at_time(state.time)).collect();
        let ranges = raycast_lidar(&state.position, &here, &rays, scenario.lidar.max_range);
        let d_lidar = ranges.iter().copied().fold(f64::INFINITY, f64::min);
        let separation = min_separation(&state.position, &here);
        let p = penalty(scenario.d_thresh, d_lidar).unwrap();
        let action = ControlAction { accel_command: a };
        records.push(StepRecord {
            step: k,
            state,
            commanded: action,
            executed: action,
            observation,
            min_separation: separation,
            d_lidar,
            penalty: p,
            reward: p,
        });
        if separation == 0.0 {
            break;
        }
    }
    Trajectory { seed: 0, start: initial, obstacles: scenario.obstacles.clone(), records }
}
