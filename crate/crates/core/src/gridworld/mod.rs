//! Deterministic gridworld POMDP.
//!
//! A 10×10 maze with obstacles, four valued terminal targets and a fixed start
//! cell. Entering a target ends the episode with that target's value; every
//! other move costs `step_cost`, and bumping into an obstacle or the grid
//! boundary costs `obstacle_penalty` while leaving the agent in place.

mod dynamics;
mod episode;
mod generate;
mod paths;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dynamics::{observe, step, Cell, Observation, ObservationMode, StepEvent, StepOutcome};
pub use episode::{run_episode, run_episode_with_mode, Policy};
pub use generate::{compute_complexity, draw_rewards, generate_grid, MAX_GENERATION_ATTEMPTS};
pub use paths::{distance_map, shortest_path, shortest_path_distance};

/// Side length of every grid.
pub const GRID_SIZE: i32 = 10;
/// Number of cells in a grid.
pub const CELL_COUNT: usize = (GRID_SIZE * GRID_SIZE) as usize;

/// A cell coordinate. `x` is the column, `y` the row; moving up increases `y`.
///
/// Ordering is row-major with `y` outer, which is the canonical cell order
/// used for serialization and tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(self) -> bool {
        (0..GRID_SIZE).contains(&self.x) && (0..GRID_SIZE).contains(&self.y)
    }

    /// Row-major index, valid only for in-bounds positions.
    pub fn index(self) -> usize {
        (self.y * GRID_SIZE + self.x) as usize
    }

    pub fn from_index(index: usize) -> Self {
        let i = index as i32;
        Self::new(i % GRID_SIZE, i / GRID_SIZE)
    }

    pub fn offset(self, action: Action) -> Self {
        let (dx, dy) = action.delta();
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn clamped(self) -> Self {
        Self::new(self.x.clamp(0, GRID_SIZE - 1), self.y.clamp(0, GRID_SIZE - 1))
    }

    pub fn manhattan(self, other: Position) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// The action that moves `self` onto an orthogonal neighbor `to`.
    pub fn action_to(self, to: Position) -> Option<Action> {
        Action::ALL.into_iter().find(|a| self.offset(*a) == to)
    }

    /// All in-bounds positions in canonical order.
    pub fn all() -> impl Iterator<Item = Position> {
        (0..CELL_COUNT).map(Position::from_index)
    }
}

impl Ord for Position {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<(i32, i32)> for Position {
    fn from((x, y): (i32, i32)) -> Self {
        Self::new(x, y)
    }
}

impl From<Position> for (i32, i32) {
    fn from(p: Position) -> Self {
        (p.x, p.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, 1),
            Action::Down => (0, -1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        match s {
            "up" => Some(Action::Up),
            "down" => Some(Action::Down),
            "left" => Some(Action::Left),
            "right" => Some(Action::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four target colors. Declaration order is the fixed tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetColor {
    Blue,
    Green,
    Orange,
    Purple,
}

impl TargetColor {
    pub const ALL: [TargetColor; 4] = [
        TargetColor::Blue,
        TargetColor::Green,
        TargetColor::Orange,
        TargetColor::Purple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetColor::Blue => "blue",
            TargetColor::Green => "green",
            TargetColor::Orange => "orange",
            TargetColor::Purple => "purple",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TargetColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Task constants shared by the environment, the predictors and the UI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub t_max: usize,
    pub episodes: usize,
    pub step_cost: f64,
    pub obstacle_penalty: f64,
    pub dirichlet_alpha: f64,
    /// Discount factor of the task formulation. Stored for completeness; no
    /// computation here consumes it.
    pub gamma: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            t_max: 31,
            episodes: 40,
            step_cost: -0.01,
            obstacle_penalty: -0.05,
            dirichlet_alpha: 0.01,
            gamma: 0.95,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max < 1 {
            return Err(Error::Parameter("t_max must be at least 1".into()));
        }
        if self.step_cost > 0.0 {
            return Err(Error::Parameter("step_cost must be <= 0".into()));
        }
        if self.obstacle_penalty > self.step_cost {
            return Err(Error::Parameter("obstacle_penalty must be <= step_cost".into()));
        }
        if !(self.dirichlet_alpha > 0.0) {
            return Err(Error::Parameter("dirichlet_alpha must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Parameter("gamma must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A validated maze. Immutable once constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile", into = "GridFile")]
pub struct Grid {
    id: String,
    obstacles: BTreeSet<Position>,
    targets: BTreeMap<TargetColor, Position>,
    start: Position,
    rewards: BTreeMap<TargetColor, f64>,
    complexity: i32,
    blocked: Vec<bool>,
    target_at: Vec<Option<TargetColor>>,
}

/// On-disk grid document. Field order is the canonical JSON layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub id: String,
    pub width: i32,
    pub height: i32,
    pub obstacles: Vec<Position>,
    pub targets: BTreeMap<TargetColor, Position>,
    pub start: Position,
    pub rewards: BTreeMap<TargetColor, f64>,
    pub complexity: i32,
}

impl Grid {
    /// Builds a grid and checks every invariant, including that `complexity`
    /// matches the recomputed decision complexity.
    pub fn new(
        id: impl Into<String>,
        obstacles: impl IntoIterator<Item = Position>,
        targets: BTreeMap<TargetColor, Position>,
        start: Position,
        rewards: BTreeMap<TargetColor, f64>,
        complexity: i32,
    ) -> Result<Self> {
        let grid = Self::assemble(id.into(), obstacles.into_iter().collect(), targets, start, rewards, complexity)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Like [`Grid::new`] but computes the complexity instead of checking it.
    pub fn with_computed_complexity(
        id: impl Into<String>,
        obstacles: impl IntoIterator<Item = Position>,
        targets: BTreeMap<TargetColor, Position>,
        start: Position,
        rewards: BTreeMap<TargetColor, f64>,
    ) -> Result<Self> {
        let mut grid = Self::assemble(id.into(), obstacles.into_iter().collect(), targets, start, rewards, 0)?;
        grid.complexity = compute_complexity(&grid)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Structural assembly: bounds, disjointness and the lookup tables. Does
    /// not check rewards, reachability or complexity.
    pub(crate) fn assemble(
        id: String,
        obstacles: BTreeSet<Position>,
        targets: BTreeMap<TargetColor, Position>,
        start: Position,
        rewards: BTreeMap<TargetColor, f64>,
        complexity: i32,
    ) -> Result<Self> {
        if targets.len() != 4 {
            return Err(Error::Invariant(format!("expected 4 targets, found {}", targets.len())));
        }
        let mut blocked = vec![false; CELL_COUNT];
        let mut target_at = vec![None; CELL_COUNT];
        for &p in &obstacles {
            if !p.in_bounds() {
                return Err(Error::Invariant(format!("obstacle {p} out of bounds")));
            }
            blocked[p.index()] = true;
        }
        for (&color, &p) in &targets {
            if !p.in_bounds() {
                return Err(Error::Invariant(format!("target {color} at {p} out of bounds")));
            }
            if blocked[p.index()] || target_at[p.index()].is_some() {
                return Err(Error::Invariant(format!("target {color} at {p} overlaps another cell")));
            }
            target_at[p.index()] = Some(color);
        }
        if !start.in_bounds() {
            return Err(Error::Invariant(format!("start {start} out of bounds")));
        }
        if blocked[start.index()] || target_at[start.index()].is_some() {
            return Err(Error::Invariant(format!("start {start} overlaps an obstacle or target")));
        }
        Ok(Self {
            id,
            obstacles,
            targets,
            start,
            rewards,
            complexity,
            blocked,
            target_at,
        })
    }

    fn validate(&self) -> Result<()> {
        validate_rewards(&self.rewards)?;
        for (&color, &p) in &self.targets {
            if shortest_path_distance(self, self.start, p).is_none() {
                return Err(Error::Invariant(format!("target {color} at {p} unreachable from start")));
            }
        }
        let computed = compute_complexity(self)?;
        if computed != self.complexity {
            return Err(Error::Invariant(format!(
                "stored complexity {} differs from computed {computed}",
                self.complexity
            )));
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> i32 {
        GRID_SIZE
    }

    pub fn height(&self) -> i32 {
        GRID_SIZE
    }

    pub fn obstacles(&self) -> &BTreeSet<Position> {
        &self.obstacles
    }

    pub fn targets(&self) -> &BTreeMap<TargetColor, Position> {
        &self.targets
    }

    pub fn target(&self, color: TargetColor) -> Position {
        self.targets[&color]
    }

    pub fn start(&self) -> Position {
        self.start
    }

    pub fn rewards(&self) -> &BTreeMap<TargetColor, f64> {
        &self.rewards
    }

    pub fn reward(&self, color: TargetColor) -> f64 {
        self.rewards[&color]
    }

    pub fn complexity(&self) -> i32 {
        self.complexity
    }

    /// The unique highest-value target.
    pub fn best_target(&self) -> TargetColor {
        best_of(&self.rewards)
    }

    pub fn is_obstacle(&self, p: Position) -> bool {
        p.in_bounds() && self.blocked[p.index()]
    }

    /// In bounds and not an obstacle. Target cells are free.
    pub fn is_free(&self, p: Position) -> bool {
        p.in_bounds() && !self.blocked[p.index()]
    }

    pub fn target_at(&self, p: Position) -> Option<TargetColor> {
        if p.in_bounds() {
            self.target_at[p.index()]
        } else {
            None
        }
    }

    pub fn cell(&self, p: Position) -> Cell {
        if self.is_obstacle(p) {
            Cell::Obstacle
        } else if let Some(c) = self.target_at(p) {
            Cell::Target(c)
        } else {
            Cell::Empty
        }
    }

    pub fn to_file(&self) -> GridFile {
        GridFile::from(self.clone())
    }
}

fn best_of(rewards: &BTreeMap<TargetColor, f64>) -> TargetColor {
    let mut best = TargetColor::Blue;
    for (&c, &r) in rewards {
        if r > rewards[&best] {
            best = c;
        }
    }
    best
}

pub(crate) fn validate_rewards(rewards: &BTreeMap<TargetColor, f64>) -> Result<()> {
    if rewards.len() != 4 {
        return Err(Error::Invariant("rewards must cover all four targets".into()));
    }
    let sum: f64 = rewards.values().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!("rewards sum to {sum}, expected 1")));
    }
    if rewards.values().any(|r| !(*r >= 0.0)) {
        return Err(Error::Invariant("rewards must be nonnegative".into()));
    }
    let max = rewards.values().cloned().fold(f64::MIN, f64::max);
    if rewards.values().filter(|r| **r == max).count() != 1 {
        return Err(Error::Invariant("rewards must have a unique maximum".into()));
    }
    Ok(())
}

impl TryFrom<GridFile> for Grid {
    type Error = Error;

    fn try_from(f: GridFile) -> Result<Self> {
        if f.width != GRID_SIZE || f.height != GRID_SIZE {
            return Err(Error::Invariant(format!(
                "grid must be {GRID_SIZE}x{GRID_SIZE}, found {}x{}",
                f.width, f.height
            )));
        }
        Grid::new(f.id, f.obstacles, f.targets, f.start, f.rewards, f.complexity)
    }
}

impl From<Grid> for GridFile {
    fn from(g: Grid) -> Self {
        GridFile {
            id: g.id,
            width: GRID_SIZE,
            height: GRID_SIZE,
            obstacles: g.obstacles.into_iter().collect(),
            targets: g.targets,
            start: g.start,
            rewards: g.rewards,
            complexity: g.complexity,
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Rewards with `best` holding most of the mass.
    pub fn rewards_with_best(best: TargetColor) -> BTreeMap<TargetColor, f64> {
        TargetColor::ALL
            .into_iter()
            .map(|c| (c, if c == best { 0.7 } else { 0.1 }))
            .collect()
    }

    pub fn targets(list: [(i32, i32); 4]) -> BTreeMap<TargetColor, Position> {
        TargetColor::ALL
            .into_iter()
            .zip(list)
            .map(|(c, (x, y))| (c, Position::new(x, y)))
            .collect()
    }

    /// Obstacle-free grid with targets in the corners (other than the origin)
    /// and the centre column, start at (4, 4). Green is the best target.
    pub fn open_grid() -> Grid {
        Grid::with_computed_complexity(
            "open",
            [],
            targets([(0, 9), (9, 0), (9, 9), (4, 8)]),
            Position::new(4, 4),
            rewards_with_best(TargetColor::Green),
        )
        .unwrap()
    }
}
