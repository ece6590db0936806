//! Step-semantics fixture for clients that reimplement the environment.

use gridmind_core::gridworld::{step, GridFile, StepOutcome};
use gridmind_core::{Action, Grid, Position, Result, TaskConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureCase {
    pub grid_id: String,
    pub position: Position,
    pub action: Action,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformanceFixture {
    pub task: TaskConfig,
    pub grids: Vec<GridFile>,
    pub cases: Vec<FixtureCase>,
}

/// Every action from every cell an agent can occupy (free, non-target) on
/// each grid.
pub fn conformance_fixture(grids: &[Grid], task: &TaskConfig) -> Result<ConformanceFixture> {
    let mut cases = Vec::new();
    for g in grids {
        for p in Position::all().filter(|p| g.is_free(*p) && g.target_at(*p).is_none()) {
            for a in Action::ALL {
                cases.push(FixtureCase {
                    grid_id: g.id().to_string(),
                    position: p,
                    action: a,
                    outcome: step(g, p, a, task)?,
                });
            }
        }
    }
    Ok(ConformanceFixture {
        task: task.clone(),
        grids: grids.iter().map(Grid::to_file).collect(),
        cases,
    })
}
