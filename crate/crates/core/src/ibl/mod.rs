//! Instance-based learning observer.
//!
//! The observer's declarative memory is pre-populated with a player's past
//! episodes under equal credit assignment, then rolled out greedily on the
//! player's grid to predict the next episode.

mod blend;
mod memory;
mod predict;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{Grid, TaskConfig};
use crate::trajectory::Trajectory;

pub use blend::{activation, blended_value, boltzmann, retrieval_probabilities, FixedXi, Retrieved, XiSource};
pub use memory::{Instance, MemoryStore, Slot};
pub use predict::{predict_player, predict_trajectory, PLAYER_SUFFIX};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IblParams {
    /// Power-law decay `d`.
    pub decay: f64,
    /// Activation noise `σ`.
    pub noise: f64,
    /// Blending temperature `τ`. `None` means `σ√2`.
    pub temperature: Option<f64>,
    /// Value of a choice with no stored instances.
    pub default_utility: f64,
    pub seed: u64,
}

impl Default for IblParams {
    fn default() -> Self {
        Self {
            decay: 0.25,
            noise: 0.5,
            temperature: None,
            default_utility: 1.0,
            seed: 0,
        }
    }
}

impl IblParams {
    pub fn temperature(&self) -> f64 {
        self.temperature.unwrap_or(self.noise * std::f64::consts::SQRT_2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0) {
            return Err(Error::Parameter("decay must be > 0".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::Parameter("noise must be >= 0".into()));
        }
        if !(self.temperature() > 0.0) {
            return Err(Error::Parameter("temperature must be > 0; set it explicitly when noise is 0".into()));
        }
        Ok(())
    }
}

/// Equal credit assignment. A consuming episode credits its target's value to
/// every step; an episode that timed out keeps each step's own reward.
pub fn assign_credit(trajectory: &Trajectory, grid: &Grid, config: &TaskConfig) -> Result<Vec<Instance>> {
    let replayed = Trajectory::replay(grid, config, trajectory.episode, &trajectory.steps)
        .map_err(|e| Error::Contract(format!("trajectory does not match grid {}: {e}", grid.id())))?;
    if replayed.consumed != trajectory.consumed || replayed.final_position != trajectory.final_position {
        return Err(Error::Contract(format!("trajectory outcome does not match grid {}", grid.id())));
    }
    let instances = match trajectory.consumed {
        Some(color) => {
            let value = grid.reward(color);
            trajectory
                .steps
                .iter()
                .map(|&(p, a)| Instance::new(p, a, value))
                .collect()
        }
        None => trajectory
            .steps
            .iter()
            .map(|&(p, a)| {
                let r = crate::gridworld::step(grid, p, a, config).map(|o| o.reward)?;
                Ok(Instance::new(p, a, r))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(instances)
}

/// Records the credited instances of `history` in episode order.
pub fn populate(memory: &mut MemoryStore, history: &[Trajectory], grid: &Grid, config: &TaskConfig) -> Result<()> {
    for t in history {
        for inst in assign_credit(t, grid, config)? {
            memory.record(inst);
        }
    }
    Ok(())
}
