//! Episode records and the shared JSON Lines trajectory log.
//!
//! One log line per episode:
//!
//! ```json
//! {"player_id":"p0001","grid_id":"g","condition":"simple","info_mode":"full",
//!  "episode":0,"steps":[[4,4,"up"]],"consumed":"purple","score":0.66}
//! ```
//!
//! The final position is not stored; it is recovered by replaying the steps
//! on the grid, which also validates the line.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{step, Action, Grid, ObservationMode, Position, StepEvent, TargetColor, TaskConfig};

/// Presentation condition of an experiment; identical to the observation mode.
pub type InfoMode = ObservationMode;

/// Maximum episodes per player.
pub const MAX_EPISODES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Simple,
    Complex,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Simple => "simple",
            Condition::Complex => "complex",
        })
    }
}

impl fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObservationMode::Full => "full",
            ObservationMode::Restricted => "restricted",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// 0-based episode index.
    pub episode: usize,
    /// `(s_t, a_t)` pairs in order.
    pub steps: Vec<(Position, Action)>,
    pub final_position: Position,
    pub consumed: Option<TargetColor>,
    pub score: f64,
}

impl Trajectory {
    /// A zero-length trajectory resting on `start`.
    pub fn stay(episode: usize, start: Position) -> Self {
        Self {
            episode,
            steps: Vec::new(),
            final_position: start,
            consumed: None,
            score: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every occupied cell in order: each step's origin followed by the final
    /// position.
    pub fn positions(&self) -> Vec<Position> {
        self.steps
            .iter()
            .map(|(p, _)| *p)
            .chain(std::iter::once(self.final_position))
            .collect()
    }

    /// Replays `actions` from the grid start. Any action after a consumption
    /// or beyond `t_max` is an error.
    pub fn from_actions(grid: &Grid, config: &TaskConfig, episode: usize, actions: &[Action]) -> Result<Self> {
        let mut steps = Vec::with_capacity(actions.len());
        let mut pos = grid.start();
        for &a in actions {
            steps.push((pos, a));
            pos = step(grid, pos, a, config)?.position;
        }
        Self::replay(grid, config, episode, &steps)
    }

    /// Rebuilds a trajectory from recorded `(position, action)` pairs,
    /// checking that each recorded position is where the previous step left
    /// the agent.
    pub fn replay(grid: &Grid, config: &TaskConfig, episode: usize, steps: &[(Position, Action)]) -> Result<Self> {
        if steps.len() > config.t_max {
            return Err(Error::IllegalTrajectory {
                step: config.t_max,
                reason: format!("{} steps exceed the horizon of {}", steps.len(), config.t_max),
            });
        }
        let mut pos = grid.start();
        let mut score = 0.0;
        let mut consumed = None;
        for (i, &(p, a)) in steps.iter().enumerate() {
            if consumed.is_some() {
                return Err(Error::IllegalTrajectory {
                    step: i,
                    reason: "step after a target was consumed".into(),
                });
            }
            if p != pos {
                let reason = if grid.is_obstacle(p) {
                    format!("recorded position {p} is an obstacle")
                } else {
                    format!("recorded position {p} but the agent is at {pos}")
                };
                return Err(Error::IllegalTrajectory { step: i, reason });
            }
            let outcome = step(grid, pos, a, config).map_err(|e| Error::IllegalTrajectory {
                step: i,
                reason: e.to_string(),
            })?;
            score += outcome.reward;
            pos = outcome.position;
            if let StepEvent::Consumed(c) = outcome.event {
                consumed = Some(c);
            }
        }
        Ok(Self {
            episode,
            steps: steps.to_vec(),
            final_position: pos,
            consumed,
            score,
        })
    }

    /// Checks that this trajectory is one [`crate::gridworld::run_episode`]
    /// could have produced: it replays, and it ends in a consumption or at
    /// the horizon.
    pub fn check_producible(&self, grid: &Grid, config: &TaskConfig) -> Result<()> {
        let replayed = Self::replay(grid, config, self.episode, &self.steps)?;
        let last = self.steps.len();
        if replayed.consumed.is_none() && last != config.t_max {
            return Err(Error::IllegalTrajectory {
                step: last,
                reason: format!("episode ended after {last} steps without reaching a target"),
            });
        }
        if replayed.consumed != self.consumed {
            return Err(Error::IllegalTrajectory {
                step: last.saturating_sub(1),
                reason: format!("recorded target {:?}, replay gives {:?}", self.consumed, replayed.consumed),
            });
        }
        if replayed.final_position != self.final_position {
            return Err(Error::IllegalTrajectory {
                step: last.saturating_sub(1),
                reason: "final position disagrees with replay".into(),
            });
        }
        if (replayed.score - self.score).abs() > 1e-9 {
            return Err(Error::IllegalTrajectory {
                step: last.saturating_sub(1),
                reason: format!("recorded score {} but replay gives {}", self.score, replayed.score),
            });
        }
        Ok(())
    }

    pub fn to_line(&self, player: &PlayerInfo) -> TrajectoryLine {
        TrajectoryLine {
            player_id: player.player_id.clone(),
            grid_id: player.grid_id.clone(),
            condition: player.condition,
            info_mode: player.info_mode,
            episode: self.episode,
            steps: self.steps.iter().map(|(p, a)| (p.x, p.y, *a)).collect(),
            consumed: self.consumed,
            score: self.score,
        }
    }
}

/// Identity of a player and the grid they played.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerInfo {
    pub player_id: String,
    pub condition: Condition,
    pub info_mode: InfoMode,
    pub grid_id: String,
    /// Synthetic agent kind, when the player is simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
}

/// A player's episodes in order.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerRecord {
    pub info: PlayerInfo,
    pub trajectories: Vec<Trajectory>,
}

impl PlayerRecord {
    pub fn new(info: PlayerInfo) -> Self {
        Self {
            info,
            trajectories: Vec::new(),
        }
    }

    pub fn player_id(&self) -> &str {
        &self.info.player_id
    }

    /// Appends the next episode, enforcing consecutive indices and the cap.
    pub fn push(&mut self, trajectory: Trajectory) -> Result<()> {
        if self.trajectories.len() >= MAX_EPISODES {
            return Err(Error::Contract(format!(
                "player {} already has {MAX_EPISODES} episodes",
                self.info.player_id
            )));
        }
        if trajectory.episode != self.trajectories.len() {
            return Err(Error::Contract(format!(
                "player {} expected episode {}, got {}",
                self.info.player_id,
                self.trajectories.len(),
                trajectory.episode
            )));
        }
        self.trajectories.push(trajectory);
        Ok(())
    }

    /// The record truncated to episodes `< episode`.
    pub fn history_before(&self, episode: usize) -> &[Trajectory] {
        &self.trajectories[..episode.min(self.trajectories.len())]
    }

    pub fn to_lines(&self) -> Vec<TrajectoryLine> {
        self.trajectories.iter().map(|t| t.to_line(&self.info)).collect()
    }
}

/// Wire form of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub player_id: String,
    pub grid_id: String,
    pub condition: Condition,
    pub info_mode: InfoMode,
    pub episode: usize,
    pub steps: Vec<(i32, i32, Action)>,
    pub consumed: Option<TargetColor>,
    pub score: f64,
}

impl TrajectoryLine {
    pub fn info(&self) -> PlayerInfo {
        PlayerInfo {
            player_id: self.player_id.clone(),
            condition: self.condition,
            info_mode: self.info_mode,
            grid_id: self.grid_id.clone(),
            agent: None,
        }
    }

    fn pairs(&self) -> Vec<(Position, Action)> {
        self.steps.iter().map(|&(x, y, a)| (Position::new(x, y), a)).collect()
    }

    /// Replays the line on `grid` and checks the recorded target and score.
    pub fn to_trajectory(&self, grid: &Grid, config: &TaskConfig) -> Result<Trajectory> {
        if grid.id() != self.grid_id {
            return Err(Error::Contract(format!(
                "line for grid {} replayed on grid {}",
                self.grid_id,
                grid.id()
            )));
        }
        let mut t = Trajectory::replay(grid, config, self.episode, &self.pairs())?;
        if t.consumed != self.consumed {
            return Err(Error::IllegalTrajectory {
                step: self.steps.len().saturating_sub(1),
                reason: format!("recorded target {:?}, replay gives {:?}", self.consumed, t.consumed),
            });
        }
        if (t.score - self.score).abs() > 1e-9 {
            return Err(Error::IllegalTrajectory {
                step: self.steps.len().saturating_sub(1),
                reason: format!("recorded score {} but replay gives {}", self.score, t.score),
            });
        }
        t.score = self.score;
        Ok(t)
    }
}

/// Groups log lines into player records, keyed and ordered by player id.
pub fn group_players<'g>(
    lines: &[TrajectoryLine],
    grid_for: impl Fn(&str) -> Option<&'g Grid>,
    config: &TaskConfig,
) -> Result<Vec<PlayerRecord>> {
    let mut by_player: BTreeMap<&str, Vec<&TrajectoryLine>> = BTreeMap::new();
    for line in lines {
        by_player.entry(&line.player_id).or_default().push(line);
    }
    let mut players = Vec::with_capacity(by_player.len());
    for (_, mut group) in by_player {
        group.sort_by_key(|l| l.episode);
        let mut record = PlayerRecord::new(group[0].info());
        for line in group {
            if line.grid_id != record.info.grid_id {
                return Err(Error::Contract(format!("player {} switches grids", line.player_id)));
            }
            let grid = grid_for(&line.grid_id)
                .ok_or_else(|| Error::Contract(format!("unknown grid {}", line.grid_id)))?;
            record.push(line.to_trajectory(grid, config)?)?;
        }
        players.push(record);
    }
    Ok(players)
}

pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
