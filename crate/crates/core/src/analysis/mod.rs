//! Episodes, metrics, UCA detection, sweeps, envelopes and countermeasure
//! plans.

mod countermeasures;
mod envelope;
mod episode;
mod metrics;
mod phases;
mod plot;
mod report;
mod sweep;
mod uca;

pub use countermeasures::{
    recommend_countermeasures, CountermeasurePlan, CurriculumStage, PlanStatus, RewardRecommendation,
    STAGE_TRAINING_STEPS,
};
pub use envelope::{derive_envelope, AxisEnvelope, EnvelopeRow, SafetyEnvelope};
pub use episode::{episode_seed, run_episode, EpisodeResult, StepRecord, Termination, Trajectory};
pub use metrics::{discounted_return, penalty, success_rate, SuccessRate, PENALTY_SCALE};
pub use phases::{segment_phases, PhaseParams, PhaseSegment};
pub use plot::render_svg;
pub use report::{CellSummary, SweepReport};
pub use sweep::{cell_coverage, run_sweep, EpisodeOutcome, Sweep, SweepOptions, SweepResult};
pub use uca::{detect_ucas, tally, violation_events, Detector, DetectorParams, UcaEvent, ViolationEvent};

use crate::perturb::PerturbError;
use crate::sim::SimError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("policy expects {expected} inputs but observations have {got}")]
    PolicyInput { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
