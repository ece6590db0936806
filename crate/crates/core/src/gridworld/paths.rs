//! Breadth-first search over free cells.
//!
//! Target cells are terminal: a path may end on one but never pass through
//! it, since stepping onto a target ends the episode.

use std::collections::VecDeque;

use super::{Action, Grid, Position, CELL_COUNT};

fn search(grid: &Grid, from: Position) -> (Vec<Option<u32>>, Vec<Option<Position>>) {
    let mut dist = vec![None; CELL_COUNT];
    let mut parent = vec![None; CELL_COUNT];
    if !grid.is_free(from) {
        return (dist, parent);
    }
    dist[from.index()] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if p != from && grid.target_at(p).is_some() {
            continue;
        }
        let d = dist[p.index()].unwrap_or(0);
        for a in Action::ALL {
            let n = p.offset(a);
            if grid.is_free(n) && dist[n.index()].is_none() {
                dist[n.index()] = Some(d + 1);
                parent[n.index()] = Some(p);
                queue.push_back(n);
            }
        }
    }
    (dist, parent)
}

/// Distance from `from` to every cell, indexed by [`Position::index`].
pub fn distance_map(grid: &Grid, from: Position) -> Vec<Option<u32>> {
    search(grid, from).0
}

/// Minimum number of legal moves from `from` to `to`, or `None` when
/// unreachable.
pub fn shortest_path_distance(grid: &Grid, from: Position, to: Position) -> Option<u32> {
    if !to.in_bounds() {
        return None;
    }
    distance_map(grid, from)[to.index()]
}

/// A shortest path from `from` to `to`, both endpoints included. Neighbors
/// are expanded in `up, down, left, right` order, so the result is
/// deterministic.
pub fn shortest_path(grid: &Grid, from: Position, to: Position) -> Option<Vec<Position>> {
    if !to.in_bounds() {
        return None;
    }
    let (dist, parent) = search(grid, from);
    dist[to.index()]?;
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur.index()]?;
        path.push(cur);
    }
    path.reverse();
    Some(path)
}
