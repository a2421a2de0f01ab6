//! Point-mass quadrotor world: dynamics, cylindrical obstacles, wind and a
//! raycast LiDAR.
//!
//! Every function here is a pure function of its inputs; randomness comes
//! from an explicitly passed RNG. Units are SI throughout.

mod geometry;
mod scenario;

pub use geometry::{
    lidar_fan, min_separation, point_cylinder_distance, ray_cylinder_distance, raycast_lidar, CONTACT_RANGE,
};
pub use scenario::{make_scenario, ObstacleLayout, ScenarioParams, ScenarioSpec, SubtaskKind, THREE_TREE_SPACING};

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Speed limit of the airframe, m/s.
pub const V_MAX: f64 = 15.0;
/// Default acceleration command limit, m/s².
pub const A_MAX: f64 = 10.0;
/// Default linear drag coefficient, 1/s.
pub const DRAG: f64 = 0.3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub time: f64,
}

impl DroneState {
    pub fn at_rest(position: Vec3) -> Self {
        Self { position, velocity: Vec3::zeros(), time: 0.0 }
    }
}

/// Commanded net acceleration (gravity is taken as compensated).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlAction {
    pub accel_command: Vec3,
}

impl ControlAction {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { accel_command: Vec3::new(x, y, z) }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn magnitude(&self) -> f64 {
        self.accel_command.norm()
    }

    /// Scales the command down so its norm does not exceed `limit`.
    pub fn clamped(self, limit: f64) -> Self {
        Self { accel_command: clamp_norm(self.accel_command, limit) }
    }
}

/// Vertical cylinder standing on the ground plane, optionally drifting at a
/// constant horizontal velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center_xy: Vec2,
    pub radius: f64,
    pub height: f64,
    #[serde(default = "Vec2::zeros")]
    pub velocity_xy: Vec2,
}

impl Obstacle {
    pub fn tree(x: f64, y: f64, radius: f64, height: f64) -> Self {
        Self { center_xy: Vec2::new(x, y), radius, height, velocity_xy: Vec2::zeros() }
    }

    /// The obstacle displaced to its position at `time`.
    pub fn at_time(&self, time: f64) -> Self {
        if self.velocity_xy == Vec2::zeros() {
            return *self;
        }
        Self { center_xy: self.center_xy + self.velocity_xy * time, ..*self }
    }

    pub fn is_valid(&self) -> bool {
        self.radius > 0.0 && self.height > 0.0 && self.center_xy.iter().all(|v| v.is_finite())
    }
}

/// Mean wind plus per-step Gaussian gusts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindField {
    pub mean: Vec3,
    pub turbulence_sigma: f64,
}

impl WindField {
    pub fn calm() -> Self {
        Self { mean: Vec3::zeros(), turbulence_sigma: 0.0 }
    }

    /// Wind with the default gust level of 10% of the mean speed.
    pub fn from_mean(mean: Vec3) -> Self {
        Self { mean, turbulence_sigma: 0.1 * mean.norm() }
    }

    /// Draws the instantaneous wind vector. No random numbers are consumed
    /// when `turbulence_sigma` is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        if self.turbulence_sigma == 0.0 {
            return self.mean;
        }
        let mut gust = || -> f64 { StandardNormal.sample(rng) };
        let (gx, gy, gz) = (gust(), gust(), gust());
        self.mean + Vec3::new(gx, gy, gz) * self.turbulence_sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub drag: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self { drag: DRAG, v_max: V_MAX, a_max: A_MAX }
    }
}

/// Sensor reading handed to the policy.
///
/// Flattened (see [`Observation::to_features`]) the layout is
/// `[lidar_ranges.., gps.x, gps.y, gps.z, imu.x, imu.y, imu.z, target.x, target.y, target.z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub lidar_ranges: Vec<f64>,
    pub gps_position: Vec3,
    pub imu_velocity: Vec3,
    pub target_relative: Vec3,
}

impl Observation {
    pub fn feature_len(ray_count: usize) -> usize {
        ray_count + 9
    }

    pub fn to_features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::feature_len(self.lidar_ranges.len()));
        out.extend_from_slice(&self.lidar_ranges);
        out.extend(self.gps_position.iter());
        out.extend(self.imu_velocity.iter());
        out.extend(self.target_relative.iter());
        out
    }

    pub fn min_range(&self) -> f64 {
        self.lidar_ranges.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn clamp_norm(v: Vec3, limit: f64) -> Vec3 {
    let n = v.norm();
    if n > limit {
        v * (limit / n)
    } else {
        v
    }
}

fn all_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Advances the drone by one semi-implicit Euler step.
///
/// `v' = clamp(v + (a + drag·(w − v))·dt, v_max)`, `p' = p + v'·dt`, where `w`
/// is the mean wind plus a gust. The ground plane is enforced by clamping
/// `z` to zero and zeroing downward velocity.
pub fn step<R: Rng + ?Sized>(
    state: &DroneState,
    action: &ControlAction,
    wind: &WindField,
    params: &DynamicsParams,
    dt: f64,
    rng: &mut R,
) -> Result<DroneState, SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !all_finite(&state.position) || !all_finite(&state.velocity) || !state.time.is_finite() {
        return Err(SimError::InvalidInput("non-finite drone state".into()));
    }
    if !all_finite(&action.accel_command) {
        return Err(SimError::InvalidInput("non-finite action".into()));
    }
    if action.magnitude() > params.a_max * (1.0 + 1e-9) {
        return Err(SimError::InvalidInput(format!(
            "action magnitude {} exceeds a_max {}",
            action.magnitude(),
            params.a_max
        )));
    }

    let wind_now = wind.sample(rng);
    let drag = (wind_now - state.velocity) * params.drag;
    let mut velocity = clamp_norm(state.velocity + (action.accel_command + drag) * dt, params.v_max);
    let mut position = state.position + velocity * dt;
    if position.z < 0.0 {
        position.z = 0.0;
        velocity.z = velocity.z.max(0.0);
    }
    Ok(DroneState { position, velocity, time: state.time + dt })
}
