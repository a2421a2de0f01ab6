use serde::{Deserialize, Serialize};

use super::episode::{StepRecord, Trajectory};
use crate::sim::{ScenarioSpec, SubtaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseParams {
    /// LiDAR range below which a step counts as obstacle avoidance, m.
    pub r_influence: f64,
    /// Horizontal distance to target inside which descent starts, m.
    pub descent_radius: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self { r_influence: 4.0, descent_radius: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSegment {
    pub phase: SubtaskKind,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

impl PhaseSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

fn label(record: &StepRecord, scenario: &ScenarioSpec, params: &PhaseParams) -> SubtaskKind {
    if record.d_lidar < params.r_influence {
        return SubtaskKind::ObstacleAvoidance;
    }
    let offset = scenario.target - record.state.position;
    if offset.x.hypot(offset.y) < params.descent_radius && record.state.velocity.z < 0.0 {
        return SubtaskKind::DescentLanding;
    }
    SubtaskKind::TakeoffNavigate
}

/// Labels every step with a mission phase and merges equal neighbours into
/// contiguous segments that cover the trajectory exactly once.
pub fn segment_phases(trajectory: &Trajectory, scenario: &ScenarioSpec, params: &PhaseParams) -> Vec<PhaseSegment> {
    let mut segments: Vec<PhaseSegment> = Vec::new();
    for (k, record) in trajectory.records.iter().enumerate() {
        let phase = label(record, scenario, params);
        match segments.last_mut() {
            Some(last) if last.phase == phase => last.end = k + 1,
            _ => segments.push(PhaseSegment { phase, start: k, end: k + 1 }),
        }
    }
    segments
}
