use serde::{Deserialize, Serialize};

use super::PerturbError;

/// Added to every cell's Bernoulli variance so cells with a certain pilot
/// outcome still receive some of the remaining budget.
pub const VARIANCE_FLOOR: f64 = 0.01;

/// Pilot outcome for one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotResult {
    pub successes: usize,
    pub episodes: usize,
}

impl PilotResult {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicatePlan {
    pub counts: Vec<usize>,
    pub budget: usize,
}

impl ReplicatePlan {
    pub fn uniform(cells: usize, replicates: usize) -> Self {
        Self { counts: vec![replicates; cells], budget: cells * replicates }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Splits `budget` episodes over the cells: each gets `min_replicates`, and
/// the rest is shared in proportion to `p̂(1 − p̂) + VARIANCE_FLOOR` using
/// largest-remainder rounding (ties go to the lower cell index). The counts
/// always sum to `budget`.
pub fn allocate_replicates(
    pilot: &[PilotResult],
    budget: usize,
    min_replicates: usize,
) -> Result<ReplicatePlan, PerturbError> {
    let cells = pilot.len();
    if cells == 0 || budget < cells * min_replicates {
        return Err(PerturbError::InsufficientBudget { budget, cells, min_replicates });
    }
    for (cell, p) in pilot.iter().enumerate() {
        if p.episodes < 2 {
            return Err(PerturbError::PilotTooSmall { cell, episodes: p.episodes });
        }
        if p.successes > p.episodes {
            return Err(PerturbError::BadPilot { cell, successes: p.successes, episodes: p.episodes });
        }
    }

    let remaining = budget - cells * min_replicates;
    let weights: Vec<f64> = pilot
        .iter()
        .map(|p| {
            let rate = p.rate();
            rate * (1.0 - rate) + VARIANCE_FLOOR
        })
        .collect();
    let total_weight: f64 = weights.iter().sum();

    let quotas: Vec<f64> = weights.iter().map(|w| remaining as f64 * w / total_weight).collect();
    let mut extra: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = extra.iter().sum();

    let mut order: Vec<usize> = (0..cells).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if assigned <= remaining {
        for &i in order.iter().cycle().take(remaining - assigned) {
            extra[i] += 1;
        }
    } else {
        // floors can overshoot by rounding error; take back from the smallest remainders
        let mut excess = assigned - remaining;
        for &i in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if extra[i] > 0 {
                extra[i] -= 1;
                excess -= 1;
            }
        }
    }

    let counts = extra.into_iter().map(|e| e + min_replicates).collect();
    Ok(ReplicatePlan { counts, budget })
}
