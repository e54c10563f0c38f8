use crate::env::{JointAction, SystemConfig};
use crate::error::{Error, Result};

/// Running prefix mean: `out[i] = (x[0] + … + x[i]) / (i + 1)`.
pub fn average_reward(instant: &[f64]) -> Result<Vec<f64>> {
    if instant.is_empty() {
        return Err(Error::Empty("reward series"));
    }
    let mut sum = 0.0;
    Ok(instant
        .iter()
        .enumerate()
        .map(|(i, r)| {
            sum += r;
            sum / (i + 1) as f64
        })
        .collect())
}

/// Empirical CDF evaluated at each grid point: fraction of values `≤ x`.
pub fn sum_rate_cdf(values: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("sum-rate sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&x| {
            let below = sorted.partition_point(|&v| v <= x);
            (x, below as f64 / n)
        })
        .collect())
}

/// CDF at each distinct sample value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut grid = values.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    sum_rate_cdf(values, &grid)
}

/// Outcome of one DRL training run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub instant: Vec<f64>,
    pub average: Vec<f64>,
    pub best_so_far: Vec<f64>,
    /// Index into `instant` at which each episode begins.
    pub episode_starts: Vec<usize>,
    pub best_reward: f64,
    pub best_action: JointAction,
    pub wall_ms: u128,
    pub seed: u64,
    pub config: SystemConfig,
}

impl RunSummary {
    /// Mean of the final `fraction` of the instant-reward series.
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        window_mean(&self.instant, fraction, false)
    }

    pub fn head_mean(&self, fraction: f64) -> f64 {
        window_mean(&self.instant, fraction, true)
    }
}

pub(crate) fn window_mean(xs: &[f64], fraction: f64, head: bool) -> f64 {
    let n = ((xs.len() as f64 * fraction).round() as usize).clamp(1, xs.len().max(1));
    let slice = if head { &xs[..n] } else { &xs[xs.len() - n..] };
    slice.iter().sum::<f64>() / slice.len() as f64
}
