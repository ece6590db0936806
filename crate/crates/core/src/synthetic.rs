//! Scripted stand-in players for verifying the pipeline end to end.
//!
//! - `optimal` walks a shortest path to the highest-value target.
//! - `satisficing` commits to the target nearest the start, whatever its
//!   value, and walks a shortest path to it.
//! - `epsilon_explorer` keeps the satisficing goal but takes a uniformly
//!   random action with probability `epsilon` at each step, re-planning the
//!   route from wherever it ends up.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{
    distance_map, run_episode_with_mode, shortest_path, Action, Grid, Observation, Policy, Position, TargetColor,
    TaskConfig,
};
use crate::seed;
use crate::trajectory::{Condition, InfoMode, PlayerInfo, PlayerRecord, MAX_EPISODES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AgentKind {
    Optimal,
    Satisficing,
    EpsilonExplorer { epsilon: f64 },
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Optimal => f.write_str("optimal"),
            AgentKind::Satisficing => f.write_str("satisficing"),
            AgentKind::EpsilonExplorer { epsilon } => write!(f, "epsilon_explorer:{epsilon}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub seed: u64,
}

impl AgentSpec {
    pub fn new(kind: AgentKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

/// The target nearest to `from` by path length, ties by color order.
pub fn nearest_target(grid: &Grid, from: Position) -> Option<TargetColor> {
    let dist = distance_map(grid, from);
    TargetColor::ALL
        .into_iter()
        .filter_map(|c| dist[grid.target(c).index()].map(|d| (d, c)))
        .min()
        .map(|(_, c)| c)
}

/// Follows shortest paths toward a goal chosen at the start, re-planning
/// after every deviation, optionally with random deviations.
pub struct RoutePolicy<'g> {
    grid: &'g Grid,
    goal: Position,
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl RoutePolicy<'_> {
    pub fn goal(&self) -> Position {
        self.goal
    }
}

impl Policy for RoutePolicy<'_> {
    fn act(&mut self, observation: &Observation) -> Action {
        if self.epsilon > 0.0 && self.rng.random::<f64>() < self.epsilon {
            return Action::ALL[self.rng.random_range(0..4)];
        }
        let pos = observation.position;
        shortest_path(self.grid, pos, self.goal)
            .and_then(|path| path.get(1).and_then(|next| pos.action_to(*next)))
            .unwrap_or(Action::Up)
    }
}

pub fn make_policy<'g>(spec: &AgentSpec, grid: &'g Grid) -> Result<RoutePolicy<'g>> {
    let nearest = || nearest_target(grid, grid.start()).ok_or_else(unreachable_goal);
    let (goal, epsilon) = match spec.kind {
        AgentKind::Optimal => (grid.best_target(), 0.0),
        AgentKind::Satisficing => (nearest()?, 0.0),
        AgentKind::EpsilonExplorer { epsilon } => {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::Parameter(format!("epsilon must lie in [0, 1], got {epsilon}")));
            }
            (nearest()?, epsilon)
        }
    };
    let goal = grid.target(goal);
    if shortest_path(grid, grid.start(), goal).is_none() {
        return Err(unreachable_goal());
    }
    Ok(RoutePolicy {
        grid,
        goal,
        epsilon,
        rng: seed::substream(spec.seed, "agent", 0),
    })
}

fn unreachable_goal() -> Error {
    Error::Generation {
        attempts: 1,
        constraint: "agent goal unreachable from start".into(),
    }
}

/// Plays a full session of `config.episodes` (at most 40) episodes.
pub fn generate_player(
    player_id: &str,
    grid: &Grid,
    condition: Condition,
    info_mode: InfoMode,
    spec: &AgentSpec,
    config: &TaskConfig,
) -> Result<PlayerRecord> {
    let mut policy = make_policy(spec, grid)?;
    let mut record = PlayerRecord::new(PlayerInfo {
        player_id: player_id.to_string(),
        condition,
        info_mode,
        grid_id: grid.id().to_string(),
        agent: Some(spec.kind.to_string()),
    });
    for e in 0..config.episodes.min(MAX_EPISODES) {
        record.push(run_episode_with_mode(grid, &mut policy, config, e, info_mode)?)?;
    }
    Ok(record)
}

/// Decision complexity assigned to each condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionComplexity {
    pub simple: i32,
    pub complex: i32,
}

impl Default for ConditionComplexity {
    fn default() -> Self {
        Self { simple: 1, complex: 4 }
    }
}

impl ConditionComplexity {
    pub fn of(&self, condition: Condition) -> i32 {
        match condition {
            Condition::Simple => self.simple,
            Condition::Complex => self.complex,
        }
    }
}

/// Splits `n` into per-kind counts by largest remainder, in mix order.
pub fn stratify(n: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_players: usize,
    pub condition: Condition,
    pub info_mode: InfoMode,
    pub mix: Vec<(AgentKind, f64)>,
    pub seed: u64,
}

/// Simulates a population on grids of the requested condition.
///
/// Agent kinds are allocated in contiguous blocks by [`stratify`]; each
/// player's grid and explorer randomness come from substreams keyed by the
/// player index.
pub fn generate_population(
    spec: &PopulationSpec,
    grids: &[Grid],
    complexity: &ConditionComplexity,
    config: &TaskConfig,
) -> Result<Vec<PlayerRecord>> {
    let total: f64 = spec.mix.iter().map(|(_, w)| w).sum();
    if spec.mix.is_empty() || (total - 1.0).abs() > 1e-9 || spec.mix.iter().any(|(_, w)| *w < 0.0) {
        return Err(Error::Parameter(format!("mix weights must be nonnegative and sum to 1, got {total}")));
    }
    let wanted = complexity.of(spec.condition);
    let pool: Vec<&Grid> = grids.iter().filter(|g| g.complexity() == wanted).collect();
    if pool.is_empty() {
        return Err(Error::Parameter(format!(
            "no grids with complexity {wanted} for condition {}",
            spec.condition
        )));
    }
    let counts = stratify(spec.n_players, &spec.mix.iter().map(|(_, w)| *w).collect::<Vec<_>>());
    let kinds: Vec<AgentKind> = spec
        .mix
        .iter()
        .zip(&counts)
        .flat_map(|((k, _), &c)| std::iter::repeat_n(*k, c))
        .collect();
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| {
            let index = i as u64;
            let grid = pool[seed::substream(spec.seed, "population/grid", index).random_range(0..pool.len())];
            let agent = AgentSpec::new(kind, seed::derive(spec.seed, "population/agent", index));
            let id = format!("{}-{}-{i:04}", spec.condition, spec.info_mode);
            generate_player(&id, grid, spec.condition, spec.info_mode, &agent, config)
        })
        .collect()
}
