//! Perturbation taxonomy (sensor, actuator, environment), the transformers
//! that apply it inside an episode, sweep grids, and variance-driven
//! replicate allocation.

mod allocate;
mod faults;
mod grid;

pub use allocate::{allocate_replicates, PilotResult, ReplicatePlan, VARIANCE_FLOOR};
pub use faults::{perturb_action, perturb_observation, range_noise, ActuatorFaults, SensorFaults};
pub use grid::{build_grid, build_grid_from, GridAxis, GridCell};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PerturbError {
    #[error("{axis} level {value} outside [{min}, {max}]")]
    OutOfRange { axis: Axis, value: f64, min: f64, max: f64 },
    #[error("{axis} level {value} must be an integer")]
    NotInteger { axis: Axis, value: f64 },
    #[error("{0} levels must be strictly increasing and start at the unperturbed value 0")]
    BadLevels(Axis),
    #[error("axis {0} listed more than once")]
    DuplicateAxis(Axis),
    #[error("wind_direction must be a unit vector")]
    BadDirection,
    #[error("budget {budget} cannot cover {cells} cells at {min_replicates} replicates each")]
    InsufficientBudget { budget: usize, cells: usize, min_replicates: usize },
    #[error("cell {cell} has {episodes} pilot episodes; at least 2 are required")]
    PilotTooSmall { cell: usize, episodes: usize },
    #[error("pilot reports {successes} successes out of {episodes} episodes for cell {cell}")]
    BadPilot { cell: usize, successes: usize, episodes: usize },
}

/// One perturbation dimension that a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SensorNoiseSigma,
    OcclusionFraction,
    SensorDelayFrames,
    ActuatorLagSteps,
    ActuatorNoiseSigma,
    WindSpeed,
    FogDensity,
    DynamicObstacleSpeed,
}

impl Axis {
    pub const ALL: [Axis; 8] = [
        Axis::SensorNoiseSigma,
        Axis::OcclusionFraction,
        Axis::SensorDelayFrames,
        Axis::ActuatorLagSteps,
        Axis::ActuatorNoiseSigma,
        Axis::WindSpeed,
        Axis::FogDensity,
        Axis::DynamicObstacleSpeed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::SensorNoiseSigma => "sensor_noise_sigma",
            Axis::OcclusionFraction => "occlusion_fraction",
            Axis::SensorDelayFrames => "sensor_delay_frames",
            Axis::ActuatorLagSteps => "actuator_lag_steps",
            Axis::ActuatorNoiseSigma => "actuator_noise_sigma",
            Axis::WindSpeed => "wind_speed",
            Axis::FogDensity => "fog_density",
            Axis::DynamicObstacleSpeed => "dynamic_obstacle_speed",
        }
    }

    /// Short label and unit for human-readable documents.
    pub fn display(self) -> (&'static str, &'static str) {
        match self {
            Axis::SensorNoiseSigma => ("sensor noise sigma", ""),
            Axis::OcclusionFraction => ("occlusion fraction", ""),
            Axis::SensorDelayFrames => ("sensor delay", "frames"),
            Axis::ActuatorLagSteps => ("actuator lag", "steps"),
            Axis::ActuatorNoiseSigma => ("actuator noise sigma", ""),
            Axis::WindSpeed => ("wind", "m/s"),
            Axis::FogDensity => ("fog density", ""),
            Axis::DynamicObstacleSpeed => ("obstacle speed", "m/s"),
        }
    }

    /// Inclusive valid range.
    pub fn range(self) -> (f64, f64) {
        match self {
            Axis::SensorNoiseSigma | Axis::OcclusionFraction | Axis::ActuatorNoiseSigma => (0.0, 0.5),
            Axis::SensorDelayFrames | Axis::ActuatorLagSteps => (0.0, 5.0),
            Axis::WindSpeed => (0.0, 18.0),
            Axis::FogDensity => (0.0, 1.0),
            Axis::DynamicObstacleSpeed => (0.0, f64::INFINITY),
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Axis::SensorDelayFrames | Axis::ActuatorLagSteps)
    }

    pub fn check(self, value: f64) -> Result<(), PerturbError> {
        let (min, max) = self.range();
        if !(value >= min && value <= max) {
            return Err(PerturbError::OutOfRange { axis: self, value, min, max });
        }
        if self.is_integer() && value.fract() != 0.0 {
            return Err(PerturbError::NotInteger { axis: self, value });
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown perturbation axis `{s}`"))
    }
}

/// A single point in perturbation space. The default is unperturbed.
///
/// Sensor noise sigma is a fraction of the LiDAR max range (and metres on
/// each GPS axis); actuator noise sigma is a fraction of `a_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    pub sensor_noise_sigma: f64,
    pub occlusion_fraction: f64,
    pub sensor_delay_frames: u32,
    pub actuator_lag_steps: u32,
    pub actuator_noise_sigma: f64,
    /// m/s
    pub wind_speed: f64,
    /// Horizontal unit vector the wind blows toward. Defaults to +y, a
    /// crosswind for the obstacle-avoidance scenarios.
    pub wind_direction: [f64; 2],
    pub fog_density: f64,
    /// m/s
    pub dynamic_obstacle_speed: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            sensor_noise_sigma: 0.0,
            occlusion_fraction: 0.0,
            sensor_delay_frames: 0,
            actuator_lag_steps: 0,
            actuator_noise_sigma: 0.0,
            wind_speed: 0.0,
            wind_direction: [0.0, 1.0],
            fog_density: 0.0,
            dynamic_obstacle_speed: 0.0,
        }
    }
}

impl PerturbationSpec {
    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::SensorNoiseSigma => self.sensor_noise_sigma,
            Axis::OcclusionFraction => self.occlusion_fraction,
            Axis::SensorDelayFrames => f64::from(self.sensor_delay_frames),
            Axis::ActuatorLagSteps => f64::from(self.actuator_lag_steps),
            Axis::ActuatorNoiseSigma => self.actuator_noise_sigma,
            Axis::WindSpeed => self.wind_speed,
            Axis::FogDensity => self.fog_density,
            Axis::DynamicObstacleSpeed => self.dynamic_obstacle_speed,
        }
    }

    /// Sets one axis, checking its range.
    pub fn set(&mut self, axis: Axis, value: f64) -> Result<(), PerturbError> {
        axis.check(value)?;
        match axis {
            Axis::SensorNoiseSigma => self.sensor_noise_sigma = value,
            Axis::OcclusionFraction => self.occlusion_fraction = value,
            Axis::SensorDelayFrames => self.sensor_delay_frames = value as u32,
            Axis::ActuatorLagSteps => self.actuator_lag_steps = value as u32,
            Axis::ActuatorNoiseSigma => self.actuator_noise_sigma = value,
            Axis::WindSpeed => self.wind_speed = value,
            Axis::FogDensity => self.fog_density = value,
            Axis::DynamicObstacleSpeed => self.dynamic_obstacle_speed = value,
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        for axis in Axis::ALL {
            axis.check(self.get(axis))?;
        }
        let [x, y] = self.wind_direction;
        if !((x.hypot(y) - 1.0).abs() < 1e-9) {
            return Err(PerturbError::BadDirection);
        }
        Ok(())
    }

    /// True when every axis sits at its unperturbed value.
    pub fn is_nominal(&self) -> bool {
        Axis::ALL.iter().all(|&a| self.get(a) == 0.0)
    }
}
