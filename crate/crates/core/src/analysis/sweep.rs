use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{episode_seed, run_episode, EpisodeResult, Trajectory};
use super::report::{CellSummary, SweepReport};
use super::uca::Detector;
use super::AnalysisError;
use crate::perturb::{GridAxis, GridCell, PilotResult, ReplicatePlan};
use crate::policy::Policy;
use crate::sim::ScenarioSpec;

/// Mixed into the base seed so pilot episodes never reuse sweep seeds.
const PILOT_SALT: u64 = 0x5049_4C4F_5453_4545;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub keep_trajectories: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub cell: usize,
    pub replicate: usize,
    pub seed: u64,
    pub result: EpisodeResult,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub report: SweepReport,
    /// Ordered by cell, then replicate.
    pub episodes: Vec<EpisodeOutcome>,
}

impl SweepResult {
    pub fn cell_episodes(&self, cell: usize) -> impl Iterator<Item = &EpisodeOutcome> {
        self.episodes.iter().filter(move |e| e.cell == cell)
    }
}

/// Everything fixed across the episodes of one sweep.
#[derive(Clone, Copy)]
pub struct Sweep<'a> {
    pub scenario: &'a ScenarioSpec,
    pub policy: &'a dyn Policy,
    pub axes: &'a [GridAxis],
    pub grid: &'a [GridCell],
    pub detector: &'a Detector,
    pub base_seed: u64,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, AnalysisError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AnalysisError::Domain(format!("cannot start worker pool: {e}")))
}

impl Sweep<'_> {
    fn run_jobs(
        &self,
        jobs: &[(usize, usize)],
        seed_of: impl Fn(usize, usize) -> u64 + Sync,
        options: SweepOptions,
    ) -> Result<Vec<EpisodeOutcome>, AnalysisError> {
        let run = |&(cell, replicate): &(usize, usize)| {
            let seed = seed_of(cell, replicate);
            let (trajectory, result) =
                run_episode(self.scenario, self.policy, &self.grid[cell].spec, seed, self.detector)?;
            Ok(EpisodeOutcome {
                cell,
                replicate,
                seed,
                result,
                trajectory: options.keep_trajectories.then_some(trajectory),
            })
        };
        if options.jobs == 1 {
            jobs.iter().map(run).collect()
        } else {
            pool(options.jobs)?.install(|| jobs.par_iter().map(run).collect())
        }
    }

    /// Runs `episodes` pilot episodes per cell with seeds disjoint from the
    /// main sweep.
    pub fn pilot(&self, episodes: usize, jobs: usize) -> Result<Vec<PilotResult>, AnalysisError> {
        let work: Vec<(usize, usize)> = (0..self.grid.len()).flat_map(|c| (0..episodes).map(move |r| (c, r))).collect();
        let salted = self.base_seed ^ PILOT_SALT;
        let outcomes =
            self.run_jobs(&work, |c, r| episode_seed(salted, c, r), SweepOptions { jobs, keep_trajectories: false })?;
        let mut pilot = vec![PilotResult { successes: 0, episodes }; self.grid.len()];
        for o in outcomes {
            pilot[o.cell].successes += usize::from(o.result.success);
        }
        Ok(pilot)
    }

    /// Runs `plan.counts[c]` replicates of every cell and aggregates them in
    /// cell order. Output does not depend on `options.jobs`.
    pub fn run(&self, plan: &ReplicatePlan, options: SweepOptions) -> Result<SweepResult, AnalysisError> {
        if plan.counts.len() != self.grid.len() {
            return Err(AnalysisError::Domain(format!(
                "plan has {} cells but the grid has {}",
                plan.counts.len(),
                self.grid.len()
            )));
        }
        if let Some(c) = plan.counts.iter().position(|&n| n == 0) {
            return Err(AnalysisError::Domain(format!("plan gives cell {c} no replicates")));
        }
        let work: Vec<(usize, usize)> =
            plan.counts.iter().enumerate().flat_map(|(c, &n)| (0..n).map(move |r| (c, r))).collect();
        let base = self.base_seed;
        let episodes = self.run_jobs(&work, |c, r| episode_seed(base, c, r), options)?;

        let mut cells = Vec::with_capacity(self.grid.len());
        let mut offset = 0;
        for (cell, &n) in self.grid.iter().zip(&plan.counts) {
            let results: Vec<EpisodeResult> = episodes[offset..offset + n].iter().map(|e| e.result.clone()).collect();
            offset += n;
            let values = self.axes.iter().map(|a| cell.spec.get(a.axis)).collect();
            cells.push(CellSummary::from_episodes(cell.index, cell.levels.clone(), values, &results)?);
        }
        let report = SweepReport {
            config_hash: String::new(),
            base_seed: self.base_seed,
            scenario: self.scenario.kind.name().to_owned(),
            policy: self.policy.name(),
            axes: self.axes.to_vec(),
            cells,
        };
        Ok(SweepResult { report, episodes })
    }
}

/// Runs a full sweep with a given plan. See [`Sweep::run`].
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    scenario: &ScenarioSpec,
    policy: &dyn Policy,
    axes: &[GridAxis],
    grid: &[GridCell],
    plan: &ReplicatePlan,
    base_seed: u64,
    detector: &Detector,
    options: SweepOptions,
) -> Result<SweepResult, AnalysisError> {
    Sweep { scenario, policy, axes, grid, detector, base_seed }.run(plan, options)
}

/// Fraction of grid cells that received at least one episode.
pub fn cell_coverage(plan: &ReplicatePlan) -> f64 {
    if plan.counts.is_empty() {
        return 0.0;
    }
    plan.counts.iter().filter(|&&n| n > 0).count() as f64 / plan.counts.len() as f64
}
