use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::envelope::SafetyEnvelope;
use super::metrics::PENALTY_SCALE;
use super::report::SweepReport;
use crate::perturb::Axis;
use crate::stpa::{StpaModel, UcaCategory};

/// Suggested training length for each curriculum stage.
pub const STAGE_TRAINING_STEPS: u64 = 3_000_000;

/// Train at one perturbation level that lies outside the envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumStage {
    pub axis: Axis,
    pub level: usize,
    pub value: f64,
    pub training_steps: u64,
    pub success_rate: f64,
    pub collisions: usize,
    /// UCA ids with nonzero tallies in the failing cell.
    pub uca_ids: Vec<String>,
    pub hazard_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecommendation {
    pub description: String,
    pub violation_episodes: usize,
    pub uca_ids: Vec<String>,
    pub hazard_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    /// Nothing failed; the analysis loop ends.
    Terminate,
    /// Apply the plan, retrain and re-run the analysis.
    Iterate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountermeasurePlan {
    pub config_hash: String,
    pub base_seed: u64,
    pub threshold: f64,
    pub status: PlanStatus,
    pub stages: Vec<CurriculumStage>,
    pub reward: Option<RewardRecommendation>,
    pub notes: Vec<String>,
}

fn ids_with_tallies(model: &StpaModel, counts: &[usize; 4], categories: &[UcaCategory]) -> Vec<String> {
    categories
        .iter()
        .filter(|c| counts[c.index()] > 0)
        .filter_map(|&c| model.uca_for(c).map(|u| u.id.clone()))
        .collect()
}

/// Builds a curriculum stage for every failing axis level beyond the
/// envelope bound, and a minimum-separation reward term when separation
/// was violated.
pub fn recommend_countermeasures(
    report: &SweepReport,
    envelope: &SafetyEnvelope,
    model: &StpaModel,
) -> CountermeasurePlan {
    let mut stages = Vec::new();
    for axis in &envelope.axes {
        let first_unvalidated = axis.bound.map_or(0, |b| b + 1);
        let Some(position) = report.axis_position(axis.axis) else {
            continue;
        };
        for row in axis.rows.iter().filter(|r| r.level >= first_unvalidated && !r.passes) {
            let cell = report.cells.iter().find(|c| {
                c.levels.iter().enumerate().all(|(i, &l)| if i == position { l == row.level } else { l == 0 })
            });
            let counts = cell.map_or([0; 4], |c| c.uca_counts);
            let uca_ids = ids_with_tallies(model, &counts, &UcaCategory::ALL);
            let hazard_ids = model.hazards_of(uca_ids.iter().map(String::as_str));
            stages.push(CurriculumStage {
                axis: axis.axis,
                level: row.level,
                value: row.value,
                training_steps: STAGE_TRAINING_STEPS,
                success_rate: row.success_rate,
                collisions: row.collisions,
                uca_ids,
                hazard_ids,
            });
        }
    }

    let mut totals = [0usize; 4];
    let mut violation_episodes = 0;
    for c in &report.cells {
        violation_episodes += c.violation_episodes;
        for (t, n) in totals.iter_mut().zip(c.uca_counts) {
            *t += n;
        }
    }
    let separation_ucas = [UcaCategory::NotProviding, UcaCategory::WrongTiming, UcaCategory::WrongDuration];
    let reward = (violation_episodes > 0 || separation_ucas.iter().any(|c| totals[c.index()] > 0)).then(|| {
        let uca_ids = ids_with_tallies(model, &totals, &separation_ucas);
        let hazard_ids = model.hazards_of(uca_ids.iter().map(String::as_str));
        RewardRecommendation {
            description: format!(
                "add the minimum-separation penalty -{PENALTY_SCALE}*(d_thresh - d_lidar)/d_thresh per step while \
                 d_lidar < d_thresh"
            ),
            violation_episodes,
            uca_ids,
            hazard_ids,
        }
    });

    let mut notes = Vec::new();
    let on_axis: Vec<usize> =
        report.cells.iter().filter(|c| c.levels.iter().filter(|&&l| l != 0).count() <= 1).map(|c| c.index).collect();
    let off_axis: Vec<String> =
        envelope.failing_cells.iter().filter(|i| !on_axis.contains(i)).map(ToString::to_string).collect();
    if !off_axis.is_empty() {
        notes.push(format!("cells failing only in combination: {}", off_axis.join(", ")));
    }
    if totals[UcaCategory::ProvidingCausesHazard.index()] > 0 {
        if let Some(u) = model.uca_for(UcaCategory::ProvidingCausesHazard) {
            notes.push(format!(
                "{} events were detected; they are the proxy for {} (recovery from excessive maneuvers)",
                u.id,
                u.linked_hazards.join(", ")
            ));
        }
    }
    if envelope.empty {
        notes.push("the unperturbed baseline fails; retrain before widening the envelope".to_owned());
    }

    let status = if stages.is_empty() && reward.is_none() && off_axis.is_empty() && !envelope.empty {
        PlanStatus::Terminate
    } else {
        PlanStatus::Iterate
    };
    CountermeasurePlan {
        config_hash: report.config_hash.clone(),
        base_seed: report.base_seed,
        threshold: envelope.threshold,
        status,
        stages,
        reward,
        notes,
    }
}

fn cite(ids: &[String]) -> String {
    if ids.is_empty() {
        "none".to_owned()
    } else {
        ids.join(", ")
    }
}

impl CountermeasurePlan {
    pub fn is_empty(&self) -> bool {
        self.stages.is_empty() && self.reward.is_none()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "Countermeasure plan").unwrap();
        writeln!(out, "config_hash: {}", self.config_hash).unwrap();
        writeln!(out, "base_seed: {}", self.base_seed).unwrap();
        writeln!(out, "threshold: {}", self.threshold).unwrap();
        writeln!(out).unwrap();
        if self.status == PlanStatus::Terminate {
            writeln!(out, "Status: safety requirements satisfied, iterative process terminates").unwrap();
            return out;
        }
        writeln!(out, "Status: countermeasures required, retrain and re-evaluate").unwrap();

        writeln!(out).unwrap();
        writeln!(out, "Curriculum stages:").unwrap();
        if self.stages.is_empty() {
            writeln!(out, "  none").unwrap();
        }
        for (i, s) in self.stages.iter().enumerate() {
            let (label, unit) = s.axis.display();
            let value = if unit.is_empty() { format!("{:?}", s.value) } else { format!("{:?} {unit}", s.value) };
            writeln!(
                out,
                "  {}. train at {label} = {value} (level {}) for {} steps; observed success rate {:.2}, {} collisions",
                i + 1,
                s.level,
                s.training_steps,
                s.success_rate,
                s.collisions
            )
            .unwrap();
            writeln!(out, "     targets UCAs: {}; hazards: {}", cite(&s.uca_ids), cite(&s.hazard_ids)).unwrap();
        }

        writeln!(out).unwrap();
        writeln!(out, "Reward shaping:").unwrap();
        match &self.reward {
            None => writeln!(out, "  none").unwrap(),
            Some(r) => {
                writeln!(out, "  {}", r.description).unwrap();
                writeln!(out, "  episodes with separation violations: {}", r.violation_episodes).unwrap();
                writeln!(out, "  targets UCAs: {}; hazards: {}", cite(&r.uca_ids), cite(&r.hazard_ids)).unwrap();
            }
        }

        if !self.notes.is_empty() {
            writeln!(out).unwrap();
            writeln!(out, "Notes:").unwrap();
            for n in &self.notes {
                writeln!(out, "  - {n}").unwrap();
            }
        }
        out
    }
}
