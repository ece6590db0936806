use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::paths::distance_map;
use super::{validate_rewards, Grid, Position, TargetColor, TaskConfig, CELL_COUNT};
use crate::error::{Error, Result};

pub const MAX_GENERATION_ATTEMPTS: usize = 50_000;

/// Dirichlet(alpha, alpha, alpha, alpha) target values, realized as four
/// Gamma(alpha, 1) draws normalized by their sum. Draws with a zero sum or a
/// tied maximum are discarded and redrawn from the same stream.
pub fn draw_rewards(seed: u64, alpha: f64) -> Result<BTreeMap<TargetColor, f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_rewards_with(&mut rng, alpha)
}

pub(crate) fn draw_rewards_with<R: Rng>(rng: &mut R, alpha: f64) -> Result<BTreeMap<TargetColor, f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("dirichlet alpha must be positive, got {alpha}")));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Parameter(e.to_string()))?;
    loop {
        let draws: [f64; 4] = std::array::from_fn(|_| gamma.sample(rng));
        let sum: f64 = draws.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            continue;
        }
        let rewards: BTreeMap<TargetColor, f64> = TargetColor::ALL
            .into_iter()
            .zip(draws)
            .map(|(c, g)| (c, g / sum))
            .collect();
        if validate_rewards(&rewards).is_ok() {
            return Ok(rewards);
        }
    }
}

/// Decision complexity `d - d'`: shortest-path distance from the start to the
/// highest-value target minus the distance to the nearest other target.
pub fn compute_complexity(grid: &Grid) -> Result<i32> {
    let dist = distance_map(grid, grid.start());
    let best = grid.best_target();
    let mut d_best = None;
    let mut d_other: Option<u32> = None;
    for (&color, &p) in grid.targets() {
        let d = dist[p.index()]
            .ok_or_else(|| Error::Invariant(format!("target {color} at {p} unreachable from start")))?;
        if color == best {
            d_best = Some(d);
        } else {
            d_other = Some(d_other.map_or(d, |o| o.min(d)));
        }
    }
    match (d_best, d_other) {
        (Some(d), Some(o)) => Ok(d as i32 - o as i32),
        _ => Err(Error::Invariant("grid needs four targets".into())),
    }
}

#[derive(Default)]
struct Rejections {
    unreachable: usize,
    no_start: usize,
    complexity: usize,
}

impl Rejections {
    fn dominant(&self, target: i32) -> String {
        let mut v = [
            (self.complexity, format!("decision complexity {target} not met")),
            (self.unreachable, "targets not all reachable".to_string()),
            (self.no_start, "no start cell at distance >= 2 from every target".to_string()),
        ];
        v.sort_by_key(|e| std::cmp::Reverse(e.0));
        v[0].1.clone()
    }
}

/// Rejection-samples a grid with exactly `target_complexity`.
///
/// Each attempt places `obstacle_count` obstacles and the four targets
/// uniformly, picks a start uniformly among free cells at least two moves
/// from every target, draws rewards and keeps the grid if every target is
/// reachable and the complexity matches.
pub fn generate_grid(seed: u64, target_complexity: i32, obstacle_count: usize, config: &TaskConfig) -> Result<Grid> {
    if target_complexity < 0 {
        return Err(Error::Parameter("target complexity must be >= 0".into()));
    }
    if obstacle_count + 5 > CELL_COUNT {
        return Err(Error::Parameter(format!("{obstacle_count} obstacles leave too few free cells")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = Rejections::default();
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let cells = index::sample(&mut rng, CELL_COUNT, obstacle_count + 4);
        let picked: Vec<Position> = cells.iter().map(Position::from_index).collect();
        let obstacles: BTreeSet<Position> = picked[..obstacle_count].iter().copied().collect();
        let targets: BTreeMap<TargetColor, Position> = TargetColor::ALL
            .into_iter()
            .zip(picked[obstacle_count..].iter().copied())
            .collect();
        let rewards = draw_rewards_with(&mut rng, config.dirichlet_alpha)?;

        // Start candidates are measured from each target outward.
        let mut scratch = Grid::assemble(
            String::new(),
            obstacles.clone(),
            targets.clone(),
            first_free(&obstacles, &targets),
            rewards.clone(),
            0,
        )?;
        let mut far_enough = [true; CELL_COUNT];
        for &t in targets.values() {
            let from_target = distance_map(&scratch, t);
            for (i, d) in from_target.iter().enumerate() {
                if matches!(d, Some(d) if *d < 2) {
                    far_enough[i] = false;
                }
            }
        }
        let candidates: Vec<Position> = Position::all()
            .filter(|p| far_enough[p.index()] && scratch.is_free(*p) && scratch.target_at(*p).is_none())
            .collect();
        if candidates.is_empty() {
            rejected.no_start += 1;
            continue;
        }
        let start = candidates[rng.random_range(0..candidates.len())];
        scratch = Grid::assemble(String::new(), obstacles.clone(), targets.clone(), start, rewards.clone(), 0)?;
        let complexity = match compute_complexity(&scratch) {
            Ok(c) => c,
            Err(_) => {
                rejected.unreachable += 1;
                continue;
            }
        };
        if complexity != target_complexity {
            rejected.complexity += 1;
            continue;
        }
        let id = format!("grid-{seed:016x}");
        return Grid::new(id, obstacles, targets, start, rewards, complexity);
    }
    Err(Error::Generation {
        attempts: MAX_GENERATION_ATTEMPTS,
        constraint: rejected.dominant(target_complexity),
    })
}

fn first_free(obstacles: &BTreeSet<Position>, targets: &BTreeMap<TargetColor, Position>) -> Position {
    Position::all()
        .find(|p| !obstacles.contains(p) && !targets.values().any(|t| t == p))
        .expect("at least five free cells")
}
