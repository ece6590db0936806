use rand::Rng;

use super::blend::blended_value;
use super::memory::{Instance, MemoryStore};
use super::{populate, IblParams};
use crate::error::Result;
use crate::gridworld::{step, Action, Grid, StepEvent, TaskConfig};
use crate::seed;
use crate::trajectory::{PlayerRecord, Trajectory};

/// Suffix appended to a player id on IBL prediction lines.
pub const PLAYER_SUFFIX: &str = "-ibl";

/// Greedy rollout from the grid start.
///
/// At a cell where the observer holds demonstrated instances, the candidate
/// actions are the demonstrated ones; elsewhere all four actions compete and
/// unseen ones are valued at the default utility. The action with the highest
/// blended value is taken, ties broken uniformly with `rng`. Step rewards
/// experienced during the rollout are recorded into a private copy of the
/// memory, so `memory` itself is untouched.
pub fn predict_trajectory<R: Rng>(
    memory: &MemoryStore,
    grid: &Grid,
    config: &TaskConfig,
    params: &IblParams,
    episode: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    params.validate()?;
    let mut local = memory.clone();
    let mut pos = grid.start();
    let mut steps = Vec::with_capacity(config.t_max);
    let mut score = 0.0;
    let mut consumed = None;
    while steps.len() < config.t_max {
        let demonstrated = memory.known_actions(pos);
        let candidates: &[Action] = if demonstrated.is_empty() {
            &Action::ALL
        } else {
            &demonstrated
        };
        let now = local.clock();
        let mut best = Vec::with_capacity(4);
        let mut best_value = f64::NEG_INFINITY;
        for &a in candidates {
            let v = blended_value(&local, pos, a, now, params, rng)?;
            if v > best_value {
                best_value = v;
                best.clear();
                best.push(a);
            } else if v == best_value {
                best.push(a);
            }
        }
        let action = if best.len() == 1 {
            best[0]
        } else {
            best[rng.random_range(0..best.len())]
        };
        let outcome = step(grid, pos, action, config)?;
        local.record(Instance::new(pos, action, outcome.reward));
        steps.push((pos, action));
        score += outcome.reward;
        pos = outcome.position;
        if let StepEvent::Consumed(c) = outcome.event {
            consumed = Some(c);
            break;
        }
    }
    Ok(Trajectory {
        episode,
        steps,
        final_position: pos,
        consumed,
        score,
    })
}

/// Predicts episodes `1..n` of a player, each from a memory holding exactly
/// the episodes before it. Noise and tie-breaks for episode `j` come from a
/// substream keyed by the player id and `j`.
pub fn predict_player(player: &PlayerRecord, grid: &Grid, config: &TaskConfig, params: &IblParams) -> Result<Vec<Trajectory>> {
    let mut memory = MemoryStore::new();
    let mut out = Vec::with_capacity(player.trajectories.len().saturating_sub(1));
    let label = format!("ibl/{}", player.player_id());
    for j in 1..player.trajectories.len() {
        populate(&mut memory, &player.trajectories[j - 1..j], grid, config)?;
        let mut rng = seed::substream(params.seed, &label, j as u64);
        out.push(predict_trajectory(&memory, grid, config, params, j, &mut rng)?);
    }
    Ok(out)
}
