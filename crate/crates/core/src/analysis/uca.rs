//! Rule-based detection of unsafe control actions in recorded trajectories.
//!
//! "Obstacle avoidance action" is operationalised as the horizontal
//! component of the commanded acceleration perpendicular to the horizontal
//! velocity (the lateral action), taken as zero below `min_speed`, where the
//! direction of travel is not meaningful. Proximity is measured per obstacle with
//! exact geometry. Rules, with thresholds from [`DetectorParams`]:
//!
//! * every run of steps with separation below `d_thresh` is a violation
//!   event, attributed to the nearest obstacle. Its approach window starts
//!   where that obstacle came within `trigger_range`.
//!   - before any lateral action `≥ act_eps`, the drone closed on the
//!     obstacle for at least `persist` consecutive steps: **not providing**;
//!   - otherwise, no lateral action `≥ act_eps` before the violation began
//!     (too little warning to count as not providing), or the first such
//!     action came with time-to-collision below `ttc_min`: **wrong timing**;
//!   - otherwise the action was timely but too weak: **wrong duration /
//!     magnitude**.
//!
//!   The first matching rule wins, so each violation gets one label.
//! * lateral action `≥ maneuver_thresh` sustained for `persist` steps with
//!   every LiDAR range at least `trigger_range`: **providing causes hazard**,
//!   one event per run, independent of violations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::episode::{StepRecord, Trajectory};
use crate::sim::{point_cylinder_distance, Obstacle, ScenarioSpec, Vec2};
use crate::stpa::{StpaModel, UcaCategory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorParams {
    /// Obstacle distance that opens the approach window, m.
    pub trigger_range: f64,
    /// Lateral action that counts as avoidance, m/s².
    pub act_eps: f64,
    /// Lateral action that counts as a hard maneuver, m/s².
    pub maneuver_thresh: f64,
    /// Minimum acceptable time-to-collision at first avoidance, s.
    pub ttc_min: f64,
    /// Steps a condition must hold.
    pub persist: usize,
    /// Below this horizontal speed the lateral action is taken as zero, m/s.
    pub min_speed: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self { trigger_range: 3.0, act_eps: 0.2, maneuver_thresh: 2.0, ttc_min: 1.0, persist: 10, min_speed: 0.5 }
    }
}

/// A contiguous run of steps closer than `d_thresh` to some obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationEvent {
    pub start_step: usize,
    /// Inclusive.
    pub end_step: usize,
    pub start_time: f64,
    pub end_time: f64,
    pub min_separation: f64,
    /// Index of the nearest obstacle at the closest point.
    pub obstacle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcaEvent {
    pub uca_id: String,
    pub category: UcaCategory,
    pub start_step: usize,
    /// Inclusive.
    pub end_step: usize,
    pub start_time: f64,
    pub end_time: f64,
    pub obstacle: Option<usize>,
    /// Measured quantities that fired the rule.
    pub evidence: BTreeMap<String, f64>,
}

/// Per-step quantities the rules work on.
struct StepView {
    lateral: f64,
    /// Separation and closing speed per obstacle.
    separation: Vec<f64>,
    closing: Vec<f64>,
    nearest: f64,
    /// Shortest unperturbed LiDAR range.
    lidar: f64,
}

fn lateral_action(record: &StepRecord, min_speed: f64) -> f64 {
    let v = Vec2::new(record.state.velocity.x, record.state.velocity.y);
    let a = Vec2::new(record.commanded.accel_command.x, record.commanded.accel_command.y);
    let speed = v.norm();
    if speed < min_speed.max(1e-9) {
        return 0.0;
    }
    (a.x * v.y - a.y * v.x).abs() / speed
}

fn closing_speed(record: &StepRecord, obstacle: &Obstacle) -> f64 {
    let p = Vec2::new(record.state.position.x, record.state.position.y);
    let to_obstacle = obstacle.center_xy - p;
    let dist = to_obstacle.norm();
    if dist < 1e-9 {
        return 0.0;
    }
    let v = Vec2::new(record.state.velocity.x, record.state.velocity.y) - obstacle.velocity_xy;
    v.dot(&to_obstacle) / dist
}

fn views(trajectory: &Trajectory, min_speed: f64) -> Vec<StepView> {
    trajectory
        .records
        .iter()
        .map(|r| {
            let here = trajectory.obstacles_at(r.state.time);
            let separation: Vec<f64> = here.iter().map(|o| point_cylinder_distance(&r.state.position, o)).collect();
            let closing = here.iter().map(|o| closing_speed(r, o)).collect();
            let nearest = separation.iter().copied().fold(f64::INFINITY, f64::min);
            StepView { lateral: lateral_action(r, min_speed), separation, closing, nearest, lidar: r.d_lidar }
        })
        .collect()
}

fn events_from_views(trajectory: &Trajectory, views: &[StepView], d_thresh: f64) -> Vec<ViolationEvent> {
    let mut events = Vec::new();
    let mut k = 0;
    while k < views.len() {
        if views[k].nearest >= d_thresh {
            k += 1;
            continue;
        }
        let start = k;
        while k < views.len() && views[k].nearest < d_thresh {
            k += 1;
        }
        let end = k - 1;
        let closest = (start..=end).min_by(|&a, &b| views[a].nearest.total_cmp(&views[b].nearest)).unwrap();
        let obstacle =
            views[closest].separation.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
        events.push(ViolationEvent {
            start_step: start,
            end_step: end,
            start_time: trajectory.records[start].state.time,
            end_time: trajectory.records[end].state.time,
            min_separation: views[closest].nearest,
            obstacle,
        });
    }
    events
}

/// Runs of steps closer than `d_thresh` to any obstacle.
pub fn violation_events(trajectory: &Trajectory, d_thresh: f64) -> Vec<ViolationEvent> {
    events_from_views(trajectory, &views(trajectory, 0.0), d_thresh)
}

/// UCA rules bound to the ids of a particular model.
#[derive(Debug, Clone)]
pub struct Detector {
    pub params: DetectorParams,
    ids: [Option<String>; 4],
}

impl Detector {
    /// Categories without a definition in `model` are never reported.
    pub fn new(model: &StpaModel, params: DetectorParams) -> Self {
        let ids = UcaCategory::ALL.map(|c| model.uca_for(c).map(|u| u.id.clone()));
        Self { params, ids }
    }

    pub fn uca_id(&self, category: UcaCategory) -> Option<&str> {
        self.ids[category.index()].as_deref()
    }

    pub fn detect(&self, trajectory: &Trajectory, scenario: &ScenarioSpec) -> Vec<UcaEvent> {
        let p = &self.params;
        let views = views(trajectory, p.min_speed);
        let time = |k: usize| trajectory.records[k].state.time;
        let mut out = Vec::new();

        for event in events_from_views(trajectory, &views, scenario.d_thresh) {
            let j = event.obstacle;
            let mut window_start = event.start_step;
            while window_start > 0 && views[window_start - 1].separation[j] < p.trigger_range {
                window_start -= 1;
            }
            let first_avoid = (window_start..event.start_step).find(|&k| views[k].lateral >= p.act_eps);
            let mut unprotected_run = 0;
            let mut run = 0;
            for v in &views[window_start..first_avoid.unwrap_or(event.start_step)] {
                run = if v.closing[j] > 0.0 && v.lateral < p.act_eps { run + 1 } else { 0 };
                unprotected_run = unprotected_run.max(run);
            }

            let mut evidence = BTreeMap::new();
            evidence.insert("min_separation".to_owned(), event.min_separation);
            evidence.insert("unprotected_steps".to_owned(), unprotected_run as f64);
            evidence.insert("window_start_time".to_owned(), time(window_start));

            let ttc = first_avoid.map(|k| {
                let closing = views[k].closing[j];
                evidence.insert("first_avoid_time".to_owned(), time(k));
                evidence.insert("lateral_at_first_avoid".to_owned(), views[k].lateral);
                if closing > 0.0 {
                    let ttc = views[k].separation[j] / closing;
                    evidence.insert("ttc_at_first_avoid".to_owned(), ttc);
                    ttc
                } else {
                    f64::INFINITY
                }
            });

            let category = if unprotected_run >= p.persist {
                UcaCategory::NotProviding
            } else if ttc.is_none_or(|t| t < p.ttc_min) {
                UcaCategory::WrongTiming
            } else {
                UcaCategory::WrongDuration
            };
            self.push(&mut out, category, event.start_step, event.end_step, Some(j), evidence, trajectory);
        }

        let mut k = 0;
        while k < views.len() {
            let hard_in_open = |v: &StepView| v.lateral >= p.maneuver_thresh && v.lidar >= p.trigger_range;
            if !hard_in_open(&views[k]) {
                k += 1;
                continue;
            }
            let start = k;
            while k < views.len() && hard_in_open(&views[k]) {
                k += 1;
            }
            if k - start >= p.persist {
                let peak = views[start..k].iter().map(|v| v.lateral).fold(0.0, f64::max);
                let evidence = BTreeMap::from([
                    ("peak_lateral".to_owned(), peak),
                    ("duration_steps".to_owned(), (k - start) as f64),
                ]);
                self.push(&mut out, UcaCategory::ProvidingCausesHazard, start, k - 1, None, evidence, trajectory);
            }
        }

        out.sort_by_key(|e| (e.start_step, e.category));
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &self,
        out: &mut Vec<UcaEvent>,
        category: UcaCategory,
        start_step: usize,
        end_step: usize,
        obstacle: Option<usize>,
        evidence: BTreeMap<String, f64>,
        trajectory: &Trajectory,
    ) {
        if let Some(id) = self.uca_id(category) {
            out.push(UcaEvent {
                uca_id: id.to_owned(),
                category,
                start_step,
                end_step,
                start_time: trajectory.records[start_step].state.time,
                end_time: trajectory.records[end_step].state.time,
                obstacle,
                evidence,
            });
        }
    }
}

/// Convenience wrapper around [`Detector::detect`].
pub fn detect_ucas(
    trajectory: &Trajectory,
    scenario: &ScenarioSpec,
    model: &StpaModel,
    params: DetectorParams,
) -> Vec<UcaEvent> {
    Detector::new(model, params).detect(trajectory, scenario)
}

/// Event counts per category, indexed by [`UcaCategory::index`].
pub fn tally(events: &[UcaEvent]) -> [usize; 4] {
    let mut counts = [0; 4];
    for e in events {
        counts[e.category.index()] += 1;
    }
    counts
}
