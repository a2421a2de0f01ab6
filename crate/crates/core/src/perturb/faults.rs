use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PerturbationSpec;
use crate::sim::{clamp_norm, ControlAction, Observation, Vec3, CONTACT_RANGE};

fn gaussian<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    std * z
}

/// One LiDAR range-noise draw before clamping: `N(0, sigma·max_range)`.
pub fn range_noise<R: Rng + ?Sized>(sigma: f64, max_range: f64, rng: &mut R) -> f64 {
    gaussian(sigma * max_range, rng)
}

/// Applies sensor perturbations in a fixed order:
///
/// 1. delay: use the frame from `sensor_delay_frames` ago (`frame_buffer`
///    holds past frames, newest last; before enough history exists the
///    oldest available frame is used);
/// 2. fog: ranges saturate at `max_range·(1 − fog_density)`;
/// 3. occlusion: `⌊occlusion_fraction·R⌋` contiguous rays starting at
///    `occlusion_start` (wrapping) read the saturated range;
/// 4. noise: `N(0, σ·max_range)` on each remaining ray, clamped to
///    `(0, saturated range]`, and `N(0, σ)` metres per GPS axis. The target
///    offset is derived from GPS, so it moves by the opposite amount.
///
/// With an all-zero spec the observation is returned unchanged and no
/// random numbers are drawn.
pub fn perturb_observation<R: Rng + ?Sized>(
    observation: &Observation,
    spec: &PerturbationSpec,
    rng: &mut R,
    frame_buffer: &[Observation],
    max_range: f64,
    occlusion_start: usize,
) -> Observation {
    let delay = spec.sensor_delay_frames as usize;
    let mut out = if delay == 0 || frame_buffer.is_empty() {
        observation.clone()
    } else {
        frame_buffer[frame_buffer.len().saturating_sub(delay)].clone()
    };

    let saturation = if spec.fog_density > 0.0 {
        let s = (max_range * (1.0 - spec.fog_density)).max(CONTACT_RANGE);
        for r in &mut out.lidar_ranges {
            *r = r.min(s);
        }
        s
    } else {
        max_range
    };

    let rays = out.lidar_ranges.len();
    let occluded = if rays == 0 { 0 } else { ((spec.occlusion_fraction * rays as f64).floor() as usize).min(rays) };
    let is_occluded = |i: usize| occluded > 0 && (i + rays - occlusion_start % rays) % rays < occluded;
    for i in 0..rays {
        if is_occluded(i) {
            out.lidar_ranges[i] = saturation;
        }
    }

    let sigma = spec.sensor_noise_sigma;
    if sigma > 0.0 {
        for i in 0..rays {
            if !is_occluded(i) {
                let noisy = out.lidar_ranges[i] + range_noise(sigma, max_range, rng);
                out.lidar_ranges[i] = noisy.clamp(CONTACT_RANGE, saturation);
            }
        }
        let (nx, ny, nz) = (gaussian(sigma, rng), gaussian(sigma, rng), gaussian(sigma, rng));
        let gps_noise = Vec3::new(nx, ny, nz);
        out.gps_position += gps_noise;
        out.target_relative -= gps_noise;
    }
    out
}

/// Applies actuator perturbations: the command from `actuator_lag_steps`
/// ago is executed (zero until that much history exists), then
/// `N(0, σ·a_max)` is added per axis and the result clamped to `a_max`.
///
/// `action_buffer` holds the previously commanded actions, newest last.
pub fn perturb_action<R: Rng + ?Sized>(
    action: &ControlAction,
    spec: &PerturbationSpec,
    rng: &mut R,
    action_buffer: &[ControlAction],
    a_max: f64,
) -> ControlAction {
    let lag = spec.actuator_lag_steps as usize;
    let mut executed = if lag == 0 {
        *action
    } else if action_buffer.len() >= lag {
        action_buffer[action_buffer.len() - lag]
    } else {
        ControlAction::zero()
    };
    let sigma = spec.actuator_noise_sigma;
    if sigma > 0.0 {
        let std = sigma * a_max;
        let (nx, ny, nz) = (gaussian(std, rng), gaussian(std, rng), gaussian(std, rng));
        executed.accel_command = clamp_norm(executed.accel_command + Vec3::new(nx, ny, nz), a_max);
    }
    executed
}

/// Per-episode sensor fault state: frame history and the occluded sector.
#[derive(Debug, Clone)]
pub struct SensorFaults {
    spec: PerturbationSpec,
    max_range: f64,
    occlusion_start: usize,
    frames: VecDeque<Observation>,
}

impl SensorFaults {
    /// Samples the occluded sector's first ray when occlusion is active.
    pub fn new<R: Rng + ?Sized>(spec: PerturbationSpec, max_range: f64, ray_count: usize, rng: &mut R) -> Self {
        let occlusion_start =
            if spec.occlusion_fraction > 0.0 && ray_count > 0 { rng.random_range(0..ray_count) } else { 0 };
        Self { spec, max_range, occlusion_start, frames: VecDeque::new() }
    }

    pub fn occlusion_start(&self) -> usize {
        self.occlusion_start
    }

    pub fn apply<R: Rng + ?Sized>(&mut self, observation: &Observation, rng: &mut R) -> Observation {
        let delay = self.spec.sensor_delay_frames as usize;
        let out = perturb_observation(
            observation,
            &self.spec,
            rng,
            self.frames.make_contiguous(),
            self.max_range,
            self.occlusion_start,
        );
        if delay > 0 {
            self.frames.push_back(observation.clone());
            if self.frames.len() > delay {
                self.frames.pop_front();
            }
        }
        out
    }
}

/// Per-episode actuator fault state: history of commanded actions.
#[derive(Debug, Clone)]
pub struct ActuatorFaults {
    spec: PerturbationSpec,
    a_max: f64,
    commands: VecDeque<ControlAction>,
}

impl ActuatorFaults {
    pub fn new(spec: PerturbationSpec, a_max: f64) -> Self {
        Self { spec, a_max, commands: VecDeque::new() }
    }

    pub fn apply<R: Rng + ?Sized>(&mut self, action: &ControlAction, rng: &mut R) -> ControlAction {
        let lag = self.spec.actuator_lag_steps as usize;
        let out = perturb_action(action, &self.spec, rng, self.commands.make_contiguous(), self.a_max);
        if lag > 0 {
            self.commands.push_back(*action);
            if self.commands.len() > lag {
                self.commands.pop_front();
            }
        }
        out
    }
}
