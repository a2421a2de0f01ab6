use serde::{Deserialize, Serialize};

use super::{AnalysisError, EpisodeResult};

/// Largest magnitude of the separation penalty, reached at contact.
pub const PENALTY_SCALE: f64 = 5.0;

/// Minimum-separation penalty: `−5·(d_thresh − d_lidar)/d_thresh` while
/// `d_lidar < d_thresh`, zero otherwise.
///
/// The raw formula turns positive beyond the threshold; it is clamped at
/// zero so it only ever penalises.
pub fn penalty(d_thresh: f64, d_lidar: f64) -> Result<f64, AnalysisError> {
    if !(d_thresh > 0.0) {
        return Err(AnalysisError::Domain(format!("d_thresh must be positive, got {d_thresh}")));
    }
    if !(d_lidar >= 0.0) {
        return Err(AnalysisError::Domain(format!("d_lidar must be non-negative, got {d_lidar}")));
    }
    if d_lidar >= d_thresh {
        return Ok(0.0);
    }
    Ok(-PENALTY_SCALE * (d_thresh - d_lidar) / d_thresh)
}

/// `Σ γᵗ·rₜ`, evaluated by Horner's rule from the last reward back.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub successes: usize,
    pub total: usize,
    pub rate: f64,
    /// Wilson score interval, 95%.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SuccessRate {
    pub fn from_counts(successes: usize, total: usize) -> Result<Self, AnalysisError> {
        if total == 0 {
            return Err(AnalysisError::EmptyInput("success rate of zero episodes".into()));
        }
        let n = total as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Ok(Self { successes, total, rate: p, ci_low: (centre - half).max(0.0), ci_high: (centre + half).min(1.0) })
    }
}

pub fn success_rate(results: &[EpisodeResult]) -> Result<SuccessRate, AnalysisError> {
    SuccessRate::from_counts(results.iter().filter(|r| r.success).count(), results.len())
}
