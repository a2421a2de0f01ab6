use serde::{Deserialize, Serialize};

use super::Policy;
use crate::sim::{clamp_norm, ControlAction, Observation, Vec3, A_MAX};

/// Gains of the potential-field controller. The defaults are tuned for the
/// single-tree scenario and then frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    /// Attraction toward the target, 1/s².
    pub k_p: f64,
    /// Velocity damping, 1/s.
    pub k_d: f64,
    /// Repulsion gain, m²/s².
    pub k_rep: f64,
    /// Rays shorter than this push the drone away, m.
    pub r_influence: f64,
    pub a_max: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { k_p: 3.0, k_d: 6.0, k_rep: 15.0, r_influence: 4.0, a_max: A_MAX }
    }
}

/// Potential-field law:
/// `a = k_p·target_relative − k_d·velocity + Σ_rays k_rep·(1/r − 1/r_influence)·(−ray)`
/// over rays with `r < r_influence`, clamped to `a_max`.
///
/// `rays` must match the observation's range array element for element.
pub fn baseline_act(observation: &Observation, params: &BaselineParams, rays: &[Vec3]) -> ControlAction {
    debug_assert_eq!(rays.len(), observation.lidar_ranges.len());
    let mut accel = observation.target_relative * params.k_p - observation.imu_velocity * params.k_d;
    for (dir, &range) in rays.iter().zip(&observation.lidar_ranges) {
        if range < params.r_influence {
            accel -= dir * (params.k_rep * (1.0 / range - 1.0 / params.r_influence));
        }
    }
    ControlAction { accel_command: clamp_norm(accel, params.a_max) }
}

#[derive(Debug, Clone)]
pub struct BaselinePolicy {
    pub params: BaselineParams,
    rays: Vec<Vec3>,
}

impl BaselinePolicy {
    pub fn new(params: BaselineParams, rays: Vec<Vec3>) -> Self {
        Self { params, rays }
    }
}

impl Policy for BaselinePolicy {
    fn act(&mut self, observation: &Observation) -> ControlAction {
        baseline_act(observation, &self.params, &self.rays)
    }

    fn name(&self) -> String {
        "baseline".into()
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::lidar_fan;

    fn obs(ranges: Vec<f64>, target: Vec3, vel: Vec3) -> Observation {
        Observation { lidar_ranges: ranges, gps_position: Vec3::zeros(), imu_velocity: vel, target_relative: target }
    }

    #[test]
    fn equilibrium_is_zero_action() {
        let rays = lidar_fan(8, 0.0);
        let o = obs(vec![10.0; 8], Vec3::zeros(), Vec3::zeros());
        assert_eq!(baseline_act(&o, &BaselineParams::default(), &rays).accel_command, Vec3::zeros());
    }

    #[test]
    fn single_ray_repulsion_magnitude() {
        let rays = lidar_fan(4, 0.0);
        let mut ranges = vec![10.0; 4];
        ranges[0] = 1.0; // obstacle along +x at 1 m
        let o = obs(ranges, Vec3::zeros(), Vec3::zeros());
        let params = BaselineParams { k_rep: 2.0, ..Default::default() };
        let a = baseline_act(&o, &params, &rays).accel_command;
        approx::assert_abs_diff_eq!(a.x, -1.5, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(a.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn output_is_clamped() {
        let rays = lidar_fan(4, 0.0);
        let o = obs(vec![10.0; 4], Vec3::new(100.0, 0.0, 0.0), Vec3::zeros());
        let a = baseline_act(&o, &BaselineParams::default(), &rays);
        approx::assert_abs_diff_eq!(a.magnitude(), A_MAX, epsilon = 1e-12);
    }
}
