//! Objective measures comparing predicted and observed trajectories.
//!
//! All logarithms are natural. Occupancy distributions are smoothed with a
//! small `epsilon` on every cell so the divergence is always finite.

mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{distance_map, Grid, Position, TargetColor, CELL_COUNT};
use crate::trajectory::Trajectory;

pub use report::{
    aggregate, evaluate_player, render_markdown, series, write_series_csv, write_summary_csv, EpisodeMetrics,
    GroupKey, MetricsReport, SeriesPoint, SummaryRow, METRICS,
};

pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Number of leading episodes used for the exploration entropy.
pub const ENTROPY_EPISODES: usize = 10;

/// A probability distribution over the grid cells in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyDistribution {
    probabilities: Vec<f64>,
}

impl OccupancyDistribution {
    /// Wraps a full-support distribution of [`CELL_COUNT`] entries.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != CELL_COUNT {
            return Err(Error::Contract(format!("expected {CELL_COUNT} cells, got {}", probabilities.len())));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::Contract("occupancy distribution must have full support".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("occupancy distribution sums to {sum}")));
        }
        Ok(Self { probabilities })
    }

    pub fn get(&self, p: Position) -> f64 {
        self.probabilities[p.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }
}

/// Visit counts of every occupied cell (start included, repeats counted)
/// plus `epsilon` on each cell, normalized.
pub fn occupancy_distribution(trajectory: &Trajectory, epsilon: f64) -> Result<OccupancyDistribution> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("smoothing epsilon must be positive, got {epsilon}")));
    }
    let mut counts = vec![epsilon; CELL_COUNT];
    for p in trajectory.positions() {
        counts[p.index()] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    Ok(OccupancyDistribution {
        probabilities: counts.into_iter().map(|c| c / total).collect(),
    })
}

/// `Σ_i p_i ln(p_i / q_i)` over two distributions on the same support.
/// Cells with `p_i = 0` contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Contract(format!("support sizes differ: {} vs {}", p.len(), q.len())));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(Error::Contract(format!("cell {i} has mass in P but not in Q")));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total)
}

/// Divergence of the predicted occupancy from the observed one.
pub fn trajectory_kl(observed: &Trajectory, predicted: &Trajectory, epsilon: f64) -> Result<f64> {
    let p = occupancy_distribution(observed, epsilon)?;
    let q = occupancy_distribution(predicted, epsilon)?;
    kl_divergence(p.as_slice(), q.as_slice())
}

/// How a prediction's end cell is mapped to a target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// A target cell maps to itself; any other cell to the target nearest
    /// by path length, ties by color order.
    #[default]
    Nearest,
    /// Only an exact target cell counts.
    Strict,
}

pub fn predicted_target(prediction: &Trajectory, grid: &Grid, rule: TargetRule) -> Option<TargetColor> {
    let end = prediction.final_position;
    if let Some(c) = grid.target_at(end) {
        return Some(c);
    }
    if rule == TargetRule::Strict {
        return None;
    }
    let dist = distance_map(grid, end);
    TargetColor::ALL
        .into_iter()
        .filter_map(|c| dist[grid.target(c).index()].map(|d| (d, c)))
        .min()
        .map(|(_, c)| c)
}

/// A mean with its standard error over `n` values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean with `sd / √n` (sample standard deviation); `se = 0` for
    /// a single value. `None` when empty.
    pub fn mean_of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, se, n })
    }

    /// Proportion of hits with the binomial error `√(p(1−p)/n)`.
    pub fn proportion(hits: usize, n: usize) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let p = hits as f64 / n as f64;
        Some(Self {
            mean: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        })
    }
}

/// Accuracy over `(predicted, observed)` target pairs. Pairs where the
/// observed episode consumed nothing are excluded.
pub fn prediction_accuracy<I>(pairs: I) -> Result<Estimate>
where
    I: IntoIterator<Item = (Option<TargetColor>, Option<TargetColor>)>,
{
    let (mut hits, mut n) = (0, 0);
    for (predicted, observed) in pairs {
        let Some(observed) = observed else { continue };
        n += 1;
        hits += usize::from(predicted == Some(observed));
    }
    Estimate::proportion(hits, n).ok_or_else(|| Error::Undefined("no episode with a consumed target".into()))
}

/// Entropy of the consumed-target frequencies; `None` when no episode in
/// the slice consumed a target.
pub fn goal_entropy<'a>(slice: impl IntoIterator<Item = &'a Trajectory>) -> Option<f64> {
    let mut counts = [0usize; 4];
    for t in slice {
        if let Some(c) = t.consumed {
            counts[c.index()] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let h = counts
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / total as f64;
            -p * p.ln()
        })
        .sum::<f64>();
    Some(h.max(0.0))
}

/// Predicted minus observed goal entropy; positive means the prediction
/// explores more.
pub fn entropy_difference<'a, 'b>(
    predicted: impl IntoIterator<Item = &'a Trajectory>,
    observed: impl IntoIterator<Item = &'b Trajectory>,
) -> Option<f64> {
    Some(goal_entropy(predicted)? - goal_entropy(observed)?)
}
