use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Action, Grid, Position, TargetColor, TaskConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "color")]
pub enum Cell {
    Empty,
    Obstacle,
    Target(TargetColor),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "color")]
pub enum StepEvent {
    Moved,
    BlockedObstacle,
    BlockedBoundary,
    Consumed(TargetColor),
}

impl StepEvent {
    pub fn is_blocked(self) -> bool {
        matches!(self, StepEvent::BlockedObstacle | StepEvent::BlockedBoundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub position: Position,
    pub reward: f64,
    pub terminal: bool,
    pub event: StepEvent,
}

/// One transition. Off-grid moves are treated like obstacle bumps.
pub fn step(grid: &Grid, pos: Position, action: Action, config: &TaskConfig) -> Result<StepOutcome> {
    if !pos.in_bounds() {
        return Err(Error::Invariant(format!("position {pos} is outside the grid")));
    }
    if grid.is_obstacle(pos) {
        return Err(Error::Invariant(format!("position {pos} is an obstacle")));
    }
    let next = pos.offset(action);
    let outcome = if !next.in_bounds() {
        StepOutcome {
            position: pos,
            reward: config.obstacle_penalty,
            terminal: false,
            event: StepEvent::BlockedBoundary,
        }
    } else if grid.is_obstacle(next) {
        StepOutcome {
            position: pos,
            reward: config.obstacle_penalty,
            terminal: false,
            event: StepEvent::BlockedObstacle,
        }
    } else if let Some(color) = grid.target_at(next) {
        StepOutcome {
            position: next,
            reward: grid.reward(color),
            terminal: true,
            event: StepEvent::Consumed(color),
        }
    } else {
        StepOutcome {
            position: next,
            reward: config.step_cost,
            terminal: false,
            event: StepEvent::Moved,
        }
    };
    Ok(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    Full,
    Restricted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub mode: ObservationMode,
    pub position: Position,
    pub step_count: usize,
    pub last_reward: f64,
    pub visible_cells: BTreeMap<Position, Cell>,
}

/// Full mode reveals all 100 cells; restricted mode only the current one.
pub fn observe(grid: &Grid, pos: Position, step_count: usize, last_reward: f64, mode: ObservationMode) -> Observation {
    let visible_cells = match mode {
        ObservationMode::Full => Position::all().map(|p| (p, grid.cell(p))).collect(),
        ObservationMode::Restricted => BTreeMap::from([(pos, grid.cell(pos))]),
    };
    Observation {
        mode,
        position: pos,
        step_count,
        last_reward,
        visible_cells,
    }
}
