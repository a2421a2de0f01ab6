use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::report::{CellSummary, SweepReport};
use super::AnalysisError;
use crate::perturb::Axis;

/// One level of an axis with every other axis at baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub level: usize,
    pub value: f64,
    pub replicates: usize,
    pub success_rate: f64,
    pub collisions: usize,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisEnvelope {
    pub axis: Axis,
    /// Highest validated level index; `None` when the baseline fails.
    pub bound: Option<usize>,
    pub bound_value: Option<f64>,
    pub bound_rate: Option<f64>,
    pub rows: Vec<EnvelopeRow>,
}

impl AxisEnvelope {
    /// E.g. `wind ≤ 4.5 m/s`.
    pub fn statement(&self) -> String {
        let (label, unit) = self.axis.display();
        match self.bound_value {
            Some(v) if unit.is_empty() => format!("{label} ≤ {v:?}"),
            Some(v) => format!("{label} ≤ {v:?} {unit}"),
            None => format!("{label}: no validated level"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyEnvelope {
    pub threshold: f64,
    pub config_hash: String,
    pub base_seed: u64,
    pub axes: Vec<AxisEnvelope>,
    /// Indices of every cell, on or off the axes, that fails the threshold
    /// or has a collision.
    pub failing_cells: Vec<usize>,
    /// The all-baseline cell itself fails, so nothing is validated.
    pub empty: bool,
}

fn check_threshold(threshold: f64) -> Result<(), AnalysisError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!("threshold must lie in (0, 1], got {threshold}")))
    }
}

fn axis_rows(report: &SweepReport, position: usize) -> Vec<&CellSummary> {
    let mut rows: Vec<&CellSummary> =
        report.cells.iter().filter(|c| c.levels.iter().enumerate().all(|(i, &l)| i == position || l == 0)).collect();
    rows.sort_by_key(|c| c.levels[position]);
    rows
}

/// Per axis, with every other axis at level 0, the largest `k` such that
/// levels `0..=k` all meet `threshold` with zero collisions.
pub fn derive_envelope(report: &SweepReport, threshold: f64) -> Result<SafetyEnvelope, AnalysisError> {
    check_threshold(threshold)?;
    report.check()?;

    let mut axes = Vec::with_capacity(report.axes.len());
    for (position, grid_axis) in report.axes.iter().enumerate() {
        let cells = axis_rows(report, position);
        let rows: Vec<EnvelopeRow> = cells
            .iter()
            .map(|c| EnvelopeRow {
                level: c.levels[position],
                value: c.values[position],
                replicates: c.replicates,
                success_rate: c.success_rate,
                collisions: c.collisions,
                passes: c.passes(threshold),
            })
            .collect();
        let mut bound = None;
        for (expected, row) in rows.iter().enumerate() {
            if row.level != expected || !row.passes {
                break;
            }
            bound = Some(expected);
        }
        let bound_row = bound.map(|b| &rows[b]);
        axes.push(AxisEnvelope {
            axis: grid_axis.axis,
            bound,
            bound_value: bound_row.map(|r| r.value),
            bound_rate: bound_row.map(|r| r.success_rate),
            rows,
        });
    }

    let failing_cells = report.cells.iter().filter(|c| !c.passes(threshold)).map(|c| c.index).collect();
    let empty = !report.cells.iter().any(|c| c.is_baseline() && c.passes(threshold));
    Ok(SafetyEnvelope {
        threshold,
        config_hash: report.config_hash.clone(),
        base_seed: report.base_seed,
        axes,
        failing_cells,
        empty,
    })
}

impl SafetyEnvelope {
    pub fn axis(&self, axis: Axis) -> Option<&AxisEnvelope> {
        self.axes.iter().find(|a| a.axis == axis)
    }

    /// Plain-text envelope document with justification rows.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "Operational safety envelope").unwrap();
        writeln!(out, "config_hash: {}", self.config_hash).unwrap();
        writeln!(out, "base_seed: {}", self.base_seed).unwrap();
        writeln!(out, "threshold: success rate >= {} with zero collisions", self.threshold).unwrap();
        writeln!(out).unwrap();
        if self.empty {
            writeln!(out, "ENVELOPE EMPTY: the unperturbed baseline does not meet the threshold").unwrap();
            writeln!(out).unwrap();
        }
        writeln!(out, "Validated bounds:").unwrap();
        for a in &self.axes {
            writeln!(out, "  {}", a.statement()).unwrap();
        }
        for a in &self.axes {
            writeln!(out).unwrap();
            writeln!(out, "{} (other axes at level 0):", a.axis).unwrap();
            writeln!(out, "  level  value  replicates  success_rate  collisions  verdict").unwrap();
            for r in &a.rows {
                writeln!(
                    out,
                    "  {:>5}  {:>5}  {:>10}  {:>12.2}  {:>10}  {}",
                    r.level,
                    format!("{:?}", r.value),
                    r.replicates,
                    r.success_rate,
                    r.collisions,
                    if r.passes { "pass" } else { "fail" }
                )
                .unwrap();
            }
        }
        writeln!(out).unwrap();
        if self.failing_cells.is_empty() {
            writeln!(out, "Failing cells: none").unwrap();
        } else {
            let list: Vec<String> = self.failing_cells.iter().map(ToString::to_string).collect();
            writeln!(out, "Failing cells: {}", list.join(", ")).unwrap();
        }
        out
    }
}
