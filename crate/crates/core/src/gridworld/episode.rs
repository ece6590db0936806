use super::{observe, step, Action, Grid, Observation, ObservationMode, TaskConfig};
use crate::error::Result;
use crate::trajectory::Trajectory;

/// Chooses the next action from the current observation.
pub trait Policy {
    fn act(&mut self, observation: &Observation) -> Action;
}

impl<F: FnMut(&Observation) -> Action> Policy for F {
    fn act(&mut self, observation: &Observation) -> Action {
        self(observation)
    }
}

/// Runs one episode under full observation. See [`run_episode_with_mode`].
pub fn run_episode(grid: &Grid, policy: &mut dyn Policy, config: &TaskConfig, episode: usize) -> Result<Trajectory> {
    run_episode_with_mode(grid, policy, config, episode, ObservationMode::Full)
}

/// Plays from `grid.start()` until a target is consumed or `t_max` actions
/// have been taken. Blocked moves consume a step.
pub fn run_episode_with_mode(
    grid: &Grid,
    policy: &mut dyn Policy,
    config: &TaskConfig,
    episode: usize,
    mode: ObservationMode,
) -> Result<Trajectory> {
    let mut pos = grid.start();
    let mut last_reward = 0.0;
    let mut steps = Vec::with_capacity(config.t_max);
    let mut score = 0.0;
    let mut consumed = None;
    while steps.len() < config.t_max {
        let obs = observe(grid, pos, steps.len(), last_reward, mode);
        let action = policy.act(&obs);
        let outcome = step(grid, pos, action, config)?;
        steps.push((pos, action));
        score += outcome.reward;
        last_reward = outcome.reward;
        pos = outcome.position;
        if let super::StepEvent::Consumed(c) = outcome.event {
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
