//! Repairs model-emitted coordinates into a legal episode.
//!
//! Repairs are applied per point, in order: clamp into the grid, move an
//! obstacle point to the nearest reachable free cell, bridge a gap with a
//! shortest free path, drop a point that cannot be reached at all. The
//! resulting walk is cut at the first target it enters or at the horizon.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::gridworld::{distance_map, shortest_path, Grid, Position, TaskConfig, GRID_SIZE};
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCounts {
    pub clamped: usize,
    pub obstacle_replaced: usize,
    pub bridged: usize,
    pub dropped: usize,
    pub truncated: usize,
}

impl RepairCounts {
    pub fn total(&self) -> usize {
        self.clamped + self.obstacle_replaced + self.bridged + self.dropped + self.truncated
    }
}

impl AddAssign for RepairCounts {
    fn add_assign(&mut self, o: Self) {
        self.clamped += o.clamped;
        self.obstacle_replaced += o.obstacle_replaced;
        self.bridged += o.bridged;
        self.dropped += o.dropped;
        self.truncated += o.truncated;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grounded {
    pub trajectory: Trajectory,
    pub repairs: RepairCounts,
}

fn clamp_coord(v: i64) -> i32 {
    v.clamp(0, i64::from(GRID_SIZE - 1)) as i32
}

/// The free cell reachable from `from` that is closest to `target` by
/// Manhattan distance, then by path length from `from`, then row-major.
fn nearest_free(grid: &Grid, target: Position, from: Position) -> Option<Position> {
    let dist = distance_map(grid, from);
    Position::all()
        .filter_map(|p| dist[p.index()].map(|d| (target.manhattan(p), d, p)))
        .min()
        .map(|(_, _, p)| p)
}

/// Grounds `coords` on `grid`. Empty input grounds to the zero-length
/// trajectory at the start cell.
pub fn ground_trajectory(coords: &[(i64, i64)], grid: &Grid, config: &TaskConfig, episode: usize) -> Grounded {
    let mut repairs = RepairCounts::default();
    let mut walk = vec![grid.start()];
    let mut cur = grid.start();
    for &(x, y) in coords {
        if grid.target_at(cur).is_some() {
            repairs.truncated += 1;
            break;
        }
        let mut p = Position::new(clamp_coord(x), clamp_coord(y));
        if (i64::from(p.x), i64::from(p.y)) != (x, y) {
            repairs.clamped += 1;
        }
        if grid.is_obstacle(p) {
            match nearest_free(grid, p, cur) {
                Some(q) => {
                    p = q;
                    repairs.obstacle_replaced += 1;
                }
                None => {
                    repairs.dropped += 1;
                    continue;
                }
            }
        }
        if p == cur {
            continue;
        }
        let Some(path) = shortest_path(grid, cur, p) else {
            repairs.dropped += 1;
            continue;
        };
        if path.len() > 2 {
            repairs.bridged += 1;
        }
        walk.extend_from_slice(&path[1..]);
        cur = p;
    }

    // The walk enters a target only as its final cell (bridges avoid
    // targets), so only the horizon can still cut it.
    if walk.len() - 1 > config.t_max {
        walk.truncate(config.t_max + 1);
        repairs.truncated += 1;
    }
    let actions: Vec<_> = walk
        .windows(2)
        .map(|w| w[0].action_to(w[1]).expect("walk cells are adjacent"))
        .collect();
    let trajectory = Trajectory::from_actions(grid, config, episode, &actions).expect("grounded walk is legal");
    Grounded { trajectory, repairs }
}
