use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::SuccessRate;
use super::{AnalysisError, EpisodeResult, Termination};
use crate::perturb::{Axis, GridAxis};
use crate::stpa::UcaCategory;

/// Aggregate over all replicates of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub index: usize,
    /// Level index along each report axis.
    pub levels: Vec<usize>,
    /// Axis values, parallel to `levels`.
    pub values: Vec<f64>,
    pub replicates: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub collisions: usize,
    /// Episodes with at least one minimum-separation violation.
    pub violation_episodes: usize,
    /// Mean over episodes of the episode minimum separation, m.
    pub mean_min_separation: f64,
    pub mean_return: f64,
    /// Event counts indexed by [`UcaCategory::index`].
    pub uca_counts: [usize; 4],
}

impl CellSummary {
    pub fn from_episodes(
        index: usize,
        levels: Vec<usize>,
        values: Vec<f64>,
        results: &[EpisodeResult],
    ) -> Result<Self, AnalysisError> {
        let rate = super::success_rate(results)?;
        let n = results.len() as f64;
        let mut uca_counts = [0; 4];
        for r in results {
            for e in &r.uca_events {
                uca_counts[e.category.index()] += 1;
            }
        }
        Ok(Self {
            index,
            levels,
            values,
            replicates: results.len(),
            successes: rate.successes,
            success_rate: rate.rate,
            ci_low: rate.ci_low,
            ci_high: rate.ci_high,
            collisions: results.iter().filter(|r| r.termination == Termination::Collision).count(),
            violation_episodes: results.iter().filter(|r| !r.violations.is_empty()).count(),
            mean_min_separation: results.iter().map(|r| r.min_separation).sum::<f64>() / n,
            mean_return: results.iter().map(|r| r.discounted_return).sum::<f64>() / n,
            uca_counts,
        })
    }

    /// A cell from counts alone, with the episode means left at zero.
    pub fn from_counts(
        index: usize,
        levels: Vec<usize>,
        values: Vec<f64>,
        successes: usize,
        replicates: usize,
    ) -> Result<Self, AnalysisError> {
        let rate = SuccessRate::from_counts(successes, replicates)?;
        Ok(Self {
            index,
            levels,
            values,
            replicates,
            successes,
            success_rate: rate.rate,
            ci_low: rate.ci_low,
            ci_high: rate.ci_high,
            collisions: 0,
            violation_episodes: 0,
            mean_min_separation: 0.0,
            mean_return: 0.0,
            uca_counts: [0; 4],
        })
    }

    pub fn uca_count(&self, category: UcaCategory) -> usize {
        self.uca_counts[category.index()]
    }

    /// Meets the success threshold with no collisions.
    pub fn passes(&self, threshold: f64) -> bool {
        self.success_rate >= threshold - 1e-12 && self.collisions == 0
    }

    pub fn is_baseline(&self) -> bool {
        self.levels.iter().all(|&l| l == 0)
    }
}

/// Aggregated sweep outcome; serialized as CSV with `#` metadata lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub base_seed: u64,
    pub scenario: String,
    pub policy: String,
    pub axes: Vec<GridAxis>,
    pub cells: Vec<CellSummary>,
}

fn uca_column(category: UcaCategory) -> &'static str {
    match category {
        UcaCategory::NotProviding => "uca_not_providing",
        UcaCategory::ProvidingCausesHazard => "uca_providing_causes_hazard",
        UcaCategory::WrongTiming => "uca_wrong_timing",
        UcaCategory::WrongDuration => "uca_wrong_duration",
    }
}

const STAT_COLUMNS: [&str; 10] = [
    "replicates",
    "successes",
    "success_rate",
    "ci_low",
    "ci_high",
    "collisions",
    "violation_episodes",
    "mean_min_separation",
    "mean_return",
    "uca_total",
];

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn malformed(message: impl Into<String>) -> AnalysisError {
    AnalysisError::Report(message.into())
}

fn num<T: std::str::FromStr>(s: &str, row: usize) -> Result<T, AnalysisError> {
    s.trim().parse().map_err(|_| malformed(format!("row {}: bad number `{s}`", row + 1)))
}

impl SweepReport {
    /// Position of `axis` among the report axes.
    pub fn axis_position(&self, axis: Axis) -> Option<usize> {
        self.axes.iter().position(|a| a.axis == axis)
    }

    pub fn header(&self) -> Vec<String> {
        let mut header = vec!["cell".to_owned()];
        for a in &self.axes {
            header.push(format!("{}_level", a.axis));
            header.push(format!("{}_value", a.axis));
        }
        header.extend(STAT_COLUMNS.iter().map(|s| s.to_string()));
        header.extend(UcaCategory::ALL.iter().map(|&c| uca_column(c).to_owned()));
        header
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# config_hash={}", self.config_hash).unwrap();
        writeln!(out, "# base_seed={}", self.base_seed).unwrap();
        writeln!(out, "# scenario={}", self.scenario).unwrap();
        writeln!(out, "# policy={}", self.policy).unwrap();
        for a in &self.axes {
            writeln!(out, "# axis {}={}", a.axis, join(&a.levels)).unwrap();
        }
        let plan: Vec<usize> = self.cells.iter().map(|c| c.replicates).collect();
        writeln!(out, "# plan={}", join(&plan)).unwrap();
        writeln!(out, "{}", self.header().join(",")).unwrap();
        for c in &self.cells {
            let mut row = vec![c.index.to_string()];
            for (level, value) in c.levels.iter().zip(&c.values) {
                row.push(level.to_string());
                row.push(value.to_string());
            }
            row.extend([
                c.replicates.to_string(),
                c.successes.to_string(),
                c.success_rate.to_string(),
                c.ci_low.to_string(),
                c.ci_high.to_string(),
                c.collisions.to_string(),
                c.violation_episodes.to_string(),
                c.mean_min_separation.to_string(),
                c.mean_return.to_string(),
                c.uca_counts.iter().sum::<usize>().to_string(),
            ]);
            row.extend(c.uca_counts.iter().map(ToString::to_string));
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, AnalysisError> {
        let mut report = SweepReport {
            config_hash: String::new(),
            base_seed: 0,
            scenario: String::new(),
            policy: String::new(),
            axes: Vec::new(),
            cells: Vec::new(),
        };
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            let Some((key, value)) = line.trim().split_once('=') else {
                continue;
            };
            match key {
                "config_hash" => report.config_hash = value.to_owned(),
                "base_seed" => {
                    report.base_seed = value.parse().map_err(|_| malformed(format!("bad base_seed `{value}`")))?
                }
                "scenario" => report.scenario = value.to_owned(),
                "policy" => report.policy = value.to_owned(),
                _ => {
                    if let Some(name) = key.strip_prefix("axis ") {
                        let axis: Axis = name.parse().map_err(malformed)?;
                        let levels = value
                            .split(';')
                            .map(|v| v.parse::<f64>().map_err(|_| malformed(format!("bad level `{v}` for {axis}"))))
                            .collect::<Result<_, _>>()?;
                        report.axes.push(GridAxis::new(axis, levels));
                    }
                }
            }
        }

        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != report.header() {
            return Err(malformed(format!("unexpected columns: {}", header.join(","))));
        }
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let mut fields = record.iter();
            let mut next =
                |what: &str| fields.next().ok_or_else(|| malformed(format!("row {}: missing {what}", row + 1)));
            let index = num(next("cell")?, row)?;
            let mut levels = Vec::with_capacity(report.axes.len());
            let mut values = Vec::with_capacity(report.axes.len());
            for a in &report.axes {
                levels.push(num(next(a.axis.name())?, row)?);
                values.push(num(next(a.axis.name())?, row)?);
            }
            let mut stats = [""; 10];
            for (slot, name) in stats.iter_mut().zip(STAT_COLUMNS) {
                *slot = next(name)?;
            }
            let mut uca_counts = [0usize; 4];
            for (slot, &c) in uca_counts.iter_mut().zip(UcaCategory::ALL.iter()) {
                *slot = num(next(uca_column(c))?, row)?;
            }
            report.cells.push(CellSummary {
                index,
                levels,
                values,
                replicates: num(stats[0], row)?,
                successes: num(stats[1], row)?,
                success_rate: num(stats[2], row)?,
                ci_low: num(stats[3], row)?,
                ci_high: num(stats[4], row)?,
                collisions: num(stats[5], row)?,
                violation_episodes: num(stats[6], row)?,
                mean_min_separation: num(stats[7], row)?,
                mean_return: num(stats[8], row)?,
                uca_counts,
            });
        }
        report.check()?;
        Ok(report)
    }

    /// Structural consistency of cells against axes.
    pub fn check(&self) -> Result<(), AnalysisError> {
        for c in &self.cells {
            if c.levels.len() != self.axes.len() || c.values.len() != self.axes.len() {
                return Err(malformed(format!("cell {} does not match the report axes", c.index)));
            }
            for (a, &l) in self.axes.iter().zip(&c.levels) {
                if l >= a.levels.len() {
                    return Err(malformed(format!("cell {}: level {l} out of range for {}", c.index, a.axis)));
                }
            }
            if c.successes > c.replicates || !(0.0..=1.0).contains(&c.success_rate) {
                return Err(malformed(format!("cell {}: inconsistent success counts", c.index)));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), AnalysisError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, AnalysisError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
