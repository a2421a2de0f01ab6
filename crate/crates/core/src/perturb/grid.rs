use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Axis, PerturbError, PerturbationSpec};

/// One swept dimension. `levels[0]` must be the unperturbed value 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub axis: Axis,
    pub levels: Vec<f64>,
}

impl GridAxis {
    pub fn new(axis: Axis, levels: Vec<f64>) -> Self {
        Self { axis, levels }
    }

    fn validate(&self) -> Result<(), PerturbError> {
        for &level in &self.levels {
            self.axis.check(level)?;
        }
        let increasing = self.levels.windows(2).all(|w| w[0] < w[1]);
        if self.levels.first() != Some(&0.0) || !increasing {
            return Err(PerturbError::BadLevels(self.axis));
        }
        Ok(())
    }
}

/// One grid point: the level index along each axis and the full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub levels: Vec<usize>,
    pub spec: PerturbationSpec,
}

/// Cartesian product of the axes over an unperturbed base spec.
pub fn build_grid(axes: &[GridAxis]) -> Result<Vec<GridCell>, PerturbError> {
    build_grid_from(&PerturbationSpec::default(), axes)
}

/// Cartesian product of the axes, with values not named by any axis taken
/// from `base`. Cells are ordered with the first axis varying slowest; cell
/// 0 has every axis at level 0.
pub fn build_grid_from(base: &PerturbationSpec, axes: &[GridAxis]) -> Result<Vec<GridCell>, PerturbError> {
    let mut seen = HashSet::new();
    for axis in axes {
        if !seen.insert(axis.axis) {
            return Err(PerturbError::DuplicateAxis(axis.axis));
        }
        axis.validate()?;
    }
    base.validate()?;

    let total: usize = axes.iter().map(|a| a.levels.len()).product();
    let mut cells = Vec::with_capacity(total);
    let mut levels = vec![0usize; axes.len()];
    for index in 0..total {
        let mut spec = *base;
        for (axis, &level) in axes.iter().zip(&levels) {
            spec.set(axis.axis, axis.levels[level])?;
        }
        cells.push(GridCell { index, levels: levels.clone(), spec });

        // odometer increment, last axis fastest
        for (slot, axis) in levels.iter_mut().zip(axes).rev() {
            *slot += 1;
            if *slot < axis.levels.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(cells)
}
