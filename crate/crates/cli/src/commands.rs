use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use stpa_harness::analysis::{
    cell_coverage, derive_envelope, recommend_countermeasures, render_svg, run_episode, segment_phases, Detector,
    EpisodeResult, PhaseParams, PhaseSegment, Sweep, SweepOptions, SweepReport,
};
use stpa_harness::perturb::{allocate_replicates, build_grid_from, PerturbError, PilotResult, ReplicatePlan};
use stpa_harness::stpa::{self, default_drone_model, StpaModel, UcaCategory};

use crate::config::{check_threshold, PolicySelector, Resolved, RunConfig};
use crate::{Outcome, RunArgs};

fn absolute(path: &Path) -> Result<PathBuf> {
    if path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    Ok(std::env::current_dir().context("reading working directory")?.join(path))
}

fn load_run(args: &RunArgs) -> Result<Resolved> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(policy) = &args.policy {
        config.policy = match policy {
            PolicySelector::Baseline => policy.to_string(),
            PolicySelector::Mlp(path) => PolicySelector::Mlp(absolute(path)?).to_string(),
        };
    }
    if let Some(out) = &args.out {
        config.output_dir = absolute(out)?;
    }
    let base_dir = args.config.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    config.resolve(&base_dir)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn validate(model_path: &Path) -> Result<Outcome> {
    let model = StpaModel::load(model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let violations = stpa::validate_model(&model);
    if violations.is_empty() {
        println!(
            "model OK: {} losses, {} hazards, {} constraints, {} UCAs",
            model.losses.len(),
            model.hazards.len(),
            model.constraints.len(),
            model.uca_definitions.len()
        );
        return Ok(Outcome::Ok);
    }
    for v in &violations {
        println!("{v}");
    }
    Ok(Outcome::Failed)
}

pub fn trace(model_path: &Path, hazard: &str) -> Result<Outcome> {
    let model = StpaModel::load(model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    match stpa::trace(&model, hazard) {
        Ok(record) => {
            println!("hazard: {}", record.hazard);
            println!("losses: {}", record.losses.join(", "));
            println!("constraints: {}", record.constraints.join(", "));
            println!("ucas: {}", record.ucas.join(", "));
            Ok(Outcome::Ok)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(Outcome::Failed)
        }
    }
}

#[derive(Serialize)]
struct RolloutSummary<'a> {
    config_hash: &'a str,
    base_seed: u64,
    seed: u64,
    scenario: &'a str,
    policy: String,
    phases: Vec<PhaseSegment>,
    result: &'a EpisodeResult,
}

pub fn rollout(args: &RunArgs) -> Result<Outcome> {
    let run = load_run(args)?;
    let config = &run.config;
    let seed = config.base_seed;
    let detector = Detector::new(&run.model, config.detector);
    let (trajectory, result) = run_episode(&run.scenario, run.policy.as_ref(), &config.perturbation, seed, &detector)?;

    let out = &config.output_dir;
    create_dir(out)?;
    write(&out.join("trajectory.jsonl"), trajectory.to_jsonl())?;
    let summary = RolloutSummary {
        config_hash: &run.config_hash,
        base_seed: config.base_seed,
        seed,
        scenario: run.scenario.kind.name(),
        policy: run.policy.name(),
        phases: segment_phases(&trajectory, &run.scenario, &PhaseParams::default()),
        result: &result,
    };
    let json = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    write(&out.join("episode_summary.json"), json + "\n")?;
    if args.plots {
        let title = format!("{} seed {seed}", run.scenario.kind.name());
        write(&out.join("trajectory.svg"), render_svg(&run.scenario, &[&trajectory], &title))?;
    }

    println!("seed: {seed}");
    println!("config_hash: {}", run.config_hash);
    println!("termination: {:?}", result.termination);
    println!("success: {}", result.success);
    println!("steps: {}", result.steps);
    println!("min_separation: {:.4} m", result.min_separation);
    println!("violation events: {}", result.violations.len());
    for e in &result.uca_events {
        println!("{} ({}) steps {}..={}", e.uca_id, e.category.label(), e.start_step, e.end_step);
    }
    println!("wrote {}", out.display());
    Ok(Outcome::Ok)
}

fn even_plan(cells: usize, budget: usize, min_replicates: usize) -> Result<ReplicatePlan, PerturbError> {
    if cells == 0 || budget < cells * min_replicates.max(1) {
        return Err(PerturbError::InsufficientBudget { budget, cells, min_replicates });
    }
    let counts = (0..cells).map(|c| budget / cells + usize::from(c < budget % cells)).collect();
    Ok(ReplicatePlan { counts, budget })
}

pub fn sweep(args: &RunArgs, jobs: Option<usize>) -> Result<Outcome> {
    let run = load_run(args)?;
    let config = &run.config;
    let section = &config.sweep;
    let jobs = jobs.unwrap_or(0);
    let grid = build_grid_from(&config.perturbation, &section.axes).context("invalid [sweep] axes")?;
    let detector = Detector::new(&run.model, config.detector);
    let sweep = Sweep {
        scenario: &run.scenario,
        policy: run.policy.as_ref(),
        axes: &section.axes,
        grid: &grid,
        detector: &detector,
        base_seed: config.base_seed,
    };

    let (pilot, plan): (Option<Vec<PilotResult>>, ReplicatePlan) = if section.pilot_episodes > 0 {
        if section.budget < grid.len() * section.min_replicates {
            Err(PerturbError::InsufficientBudget {
                budget: section.budget,
                cells: grid.len(),
                min_replicates: section.min_replicates,
            })?;
        }
        let pilot = sweep.pilot(section.pilot_episodes, jobs)?;
        let plan = allocate_replicates(&pilot, section.budget, section.min_replicates)?;
        (Some(pilot), plan)
    } else {
        (None, even_plan(grid.len(), section.budget, section.min_replicates)?)
    };

    let mut result = sweep.run(&plan, SweepOptions { jobs, keep_trajectories: true })?;
    result.report.config_hash = run.config_hash.clone();

    let out = &config.output_dir;
    let traj_dir = out.join("trajectories");
    create_dir(&traj_dir)?;
    result.report.write(&out.join("report.csv"))?;
    for e in &result.episodes {
        if let Some(t) = &e.trajectory {
            write(&traj_dir.join(format!("c{:03}_r{:03}.jsonl", e.cell, e.replicate)), t.to_jsonl())?;
        }
    }
    if args.plots {
        let plot_dir = out.join("plots");
        create_dir(&plot_dir)?;
        for cell in &result.report.cells {
            let trajectories: Vec<_> = result.cell_episodes(cell.index).filter_map(|e| e.trajectory.as_ref()).collect();
            let title = format!("cell {}: success {}/{}", cell.index, cell.successes, cell.replicates);
            write(
                &plot_dir.join(format!("cell_{:03}.svg", cell.index)),
                render_svg(&run.scenario, &trajectories, &title),
            )?;
        }
    }
    let summary = sweep_summary(&run, &result.report, &plan, pilot.as_deref());
    write(&out.join("sweep_summary.txt"), &summary)?;
    print!("{summary}");
    println!("wrote {}", out.display());
    Ok(Outcome::Ok)
}

fn sweep_summary(run: &Resolved, report: &SweepReport, plan: &ReplicatePlan, pilot: Option<&[PilotResult]>) -> String {
    let mut s = String::new();
    writeln!(s, "Perturbation sweep").unwrap();
    writeln!(s, "config_hash: {}", run.config_hash).unwrap();
    writeln!(s, "base_seed: {}", report.base_seed).unwrap();
    writeln!(s, "scenario: {}", report.scenario).unwrap();
    writeln!(s, "policy: {}", report.policy).unwrap();
    for a in &report.axes {
        let levels: Vec<String> = a.levels.iter().map(|v| format!("{v:?}")).collect();
        writeln!(s, "axis {}: {}", a.axis, levels.join(", ")).unwrap();
    }
    let counts: Vec<String> = plan.counts.iter().map(ToString::to_string).collect();
    writeln!(s, "plan ({} episodes): {}", plan.total(), counts.join(", ")).unwrap();
    match pilot {
        Some(p) => {
            let rates: Vec<String> = p.iter().map(|r| format!("{}/{}", r.successes, r.episodes)).collect();
            writeln!(s, "pilot: {}", rates.join(", ")).unwrap();
        }
        None => writeln!(s, "pilot: none (even split)").unwrap(),
    }
    writeln!(s, "cell coverage: {}", cell_coverage(plan)).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "cell  replicates  success_rate  ci95             collisions  violations  ucas").unwrap();
    for c in &report.cells {
        let ucas: Vec<String> = c.uca_counts.iter().map(ToString::to_string).collect();
        writeln!(
            s,
            "{:>4}  {:>10}  {:>12.2}  [{:.3}, {:.3}]  {:>10}  {:>10}  {}",
            c.index,
            c.replicates,
            c.success_rate,
            c.ci_low,
            c.ci_high,
            c.collisions,
            c.violation_episodes,
            ucas.join("/")
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "UCA tally:").unwrap();
    for category in UcaCategory::ALL {
        let total: usize = report.cells.iter().map(|c| c.uca_count(category)).sum();
        let id = run.model.uca_for(category).map_or("-", |u| u.id.as_str());
        writeln!(s, "  {id} {}: {total}", category.label()).unwrap();
    }
    if let Some(u) = run.model.uca_for(UcaCategory::ProvidingCausesHazard) {
        writeln!(s, "  note: {} events serve as the proxy for {}", u.id, u.linked_hazards.join(", ")).unwrap();
    }
    s
}

fn finish_document(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        write(path, text)?;
    }
    Ok(())
}

pub fn envelope(report_path: &Path, threshold: f64, out: Option<&Path>) -> Result<Outcome> {
    check_threshold(threshold)?;
    let report = SweepReport::read(report_path).with_context(|| format!("reading report {}", report_path.display()))?;
    let envelope = derive_envelope(&report, threshold)?;
    finish_document(&envelope.render(), out)?;
    Ok(if envelope.empty { Outcome::Failed } else { Outcome::Ok })
}

pub fn plan(report_path: &Path, model_path: Option<&Path>, threshold: f64, out: Option<&Path>) -> Result<Outcome> {
    check_threshold(threshold)?;
    let model = match model_path {
        Some(p) => StpaModel::load(p).with_context(|| format!("loading model {}", p.display()))?,
        None => default_drone_model(),
    };
    let report = SweepReport::read(report_path).with_context(|| format!("reading report {}", report_path.display()))?;
    let envelope = derive_envelope(&report, threshold)?;
    let plan = recommend_countermeasures(&report, &envelope, &model);
    finish_document(&plan.render(), out)?;
    Ok(Outcome::Ok)
}
