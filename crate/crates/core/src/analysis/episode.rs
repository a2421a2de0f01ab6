use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{discounted_return, penalty};
use super::uca::{violation_events, Detector, UcaEvent, ViolationEvent};
use super::AnalysisError;
use crate::perturb::{ActuatorFaults, PerturbationSpec, SensorFaults};
use crate::policy::Policy;
use crate::sim::{
    min_separation, raycast_lidar, step, ControlAction, DroneState, Observation, Obstacle, ScenarioSpec, Vec2, Vec3,
    WindField,
};

/// Everything recorded for one control step. `state` is the state reached
/// after executing the action; separations and penalty refer to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub state: DroneState,
    pub commanded: ControlAction,
    pub executed: ControlAction,
    /// What the policy saw, after sensor perturbation.
    pub observation: Observation,
    /// Exact distance to the nearest obstacle surface. Serialized as `null`
    /// when the scenario has no obstacles.
    pub min_separation: f64,
    /// Shortest unperturbed LiDAR range.
    pub d_lidar: f64,
    pub penalty: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub start: DroneState,
    /// Obstacles at time zero, with their per-episode velocities.
    pub obstacles: Vec<Obstacle>,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn obstacles_at(&self, time: f64) -> Vec<Obstacle> {
        self.obstacles.iter().map(|o| o.at_time(time)).collect()
    }

    /// One JSON object per step, newline separated.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTarget,
    Collision,
    StepCap,
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub success: bool,
    pub termination: Termination,
    pub steps: usize,
    pub min_separation: f64,
    /// Largest realised acceleration `|Δv|/dt`, m/s².
    pub max_acceleration: f64,
    /// Mean `|Δ commanded action|` per step, m/s².
    pub control_smoothness: f64,
    pub discounted_return: f64,
    pub violations: Vec<ViolationEvent>,
    pub uca_events: Vec<UcaEvent>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-episode seed derived from the sweep seed and grid position.
pub fn episode_seed(base_seed: u64, cell: usize, replicate: usize) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ cell as u64);
    splitmix64(h ^ (replicate as u64).rotate_left(32))
}

fn reached(scenario: &ScenarioSpec, state: &DroneState) -> bool {
    let close = (state.position - scenario.target).norm() <= scenario.success_radius;
    match scenario.touchdown_speed {
        Some(limit) => close && state.velocity.norm() <= limit,
        None => close,
    }
}

/// Runs one closed-loop episode:
/// observe → perturb observation → policy → perturb action → step.
///
/// All randomness derives from `seed`. The per-step reward is the
/// minimum-separation penalty on the unperturbed LiDAR minimum.
pub fn run_episode(
    scenario: &ScenarioSpec,
    policy: &dyn Policy,
    spec: &PerturbationSpec,
    seed: u64,
    detector: &Detector,
) -> Result<(Trajectory, EpisodeResult), AnalysisError> {
    scenario.validate()?;
    spec.validate()?;
    let rays = scenario.lidar.rays();
    if let Some(expected) = policy.input_len() {
        let got = Observation::feature_len(rays.len());
        if expected != got {
            return Err(AnalysisError::PolicyInput { expected, got });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = policy.clone_box();
    policy.reset();

    let mut obstacles = scenario.obstacles.clone();
    if spec.dynamic_obstacle_speed > 0.0 {
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        let velocity = Vec2::new(heading.cos(), heading.sin()) * spec.dynamic_obstacle_speed;
        for o in &mut obstacles {
            o.velocity_xy = velocity;
        }
    }
    let [wx, wy] = spec.wind_direction;
    let wind = WindField::from_mean(Vec3::new(wx, wy, 0.0) * spec.wind_speed);
    let max_range = scenario.lidar.max_range;
    let a_max = scenario.dynamics.a_max;
    let mut sensor = SensorFaults::new(*spec, max_range, rays.len(), &mut rng);
    let mut actuator = ActuatorFaults::new(*spec, a_max);

    let start = DroneState::at_rest(scenario.start);
    let mut state = start;
    let mut ranges = raycast_lidar(&state.position, &obstacles, &rays, max_range);
    let mut records = Vec::with_capacity(scenario.step_cap);
    let mut termination = Termination::StepCap;

    for k in 0..scenario.step_cap {
        let clean = Observation {
            lidar_ranges: ranges,
            gps_position: state.position,
            imu_velocity: state.velocity,
            target_relative: scenario.target - state.position,
        };
        let observation = sensor.apply(&clean, &mut rng);
        let commanded = policy.act(&observation).clamped(a_max);
        let executed = actuator.apply(&commanded, &mut rng);
        state = step(&state, &executed, &wind, &scenario.dynamics, scenario.dt, &mut rng)?;

        let here: Vec<Obstacle> = obstacles.iter().map(|o| o.at_time(state.time)).collect();
        ranges = raycast_lidar(&state.position, &here, &rays, max_range);
        let d_lidar = ranges.iter().copied().fold(f64::INFINITY, f64::min);
        let separation = min_separation(&state.position, &here);
        let step_penalty = penalty(scenario.d_thresh, d_lidar)?;
        records.push(StepRecord {
            step: k,
            state,
            commanded,
            executed,
            observation,
            min_separation: separation,
            d_lidar,
            penalty: step_penalty,
            reward: step_penalty,
        });

        if separation == 0.0 {
            termination = Termination::Collision;
            break;
        }
        if reached(scenario, &state) {
            termination = Termination::ReachedTarget;
            break;
        }
        if !scenario.bounds.contains(&state.position) {
            termination = Termination::OutOfBounds;
            break;
        }
    }

    let trajectory = Trajectory { seed, start, obstacles, records };
    let result = summarize(scenario, &trajectory, termination, detector);
    Ok((trajectory, result))
}

fn summarize(
    scenario: &ScenarioSpec,
    trajectory: &Trajectory,
    termination: Termination,
    detector: &Detector,
) -> EpisodeResult {
    let records = &trajectory.records;
    let min_sep = records.iter().map(|r| r.min_separation).fold(f64::INFINITY, f64::min);

    let mut prev_velocity = trajectory.start.velocity;
    let mut max_accel: f64 = 0.0;
    for r in records {
        max_accel = max_accel.max((r.state.velocity - prev_velocity).norm() / scenario.dt);
        prev_velocity = r.state.velocity;
    }
    let smoothness = if records.len() < 2 {
        0.0
    } else {
        let total: f64 =
            records.windows(2).map(|w| (w[1].commanded.accel_command - w[0].commanded.accel_command).norm()).sum();
        total / (records.len() - 1) as f64
    };
    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();

    EpisodeResult {
        seed: trajectory.seed,
        success: termination == Termination::ReachedTarget,
        termination,
        steps: records.len(),
        min_separation: min_sep,
        max_acceleration: max_accel,
        control_smoothness: smoothness,
        discounted_return: discounted_return(&rewards, scenario.gamma),
        violations: violation_events(trajectory, scenario.d_thresh),
        uca_events: detector.detect(trajectory, scenario),
    }
}
