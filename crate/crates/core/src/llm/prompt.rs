use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gridworld::{Grid, Position, TargetColor};
use crate::trajectory::Trajectory;

/// Task instruction given to the model ahead of the interaction history.
pub const TASK_INSTRUCTION: &str = "In a gridworld with obstacles represented by black blocks, a person navigates to find a goal with the highest score among four goals: blue, green, orange, and purple. Movement is restricted to up, down, left, and right directions within the grid. Each episode allows a maximum of 31 steps, with a total of 40 episodes permitted. The score is determined by reaching a target, with a penalty of 0.01 points for each step taken and 0.05 points for colliding with an obstacle. The objective is to locate the highest value target within the grid.

Given the current position at (x, y),
Moving up will result in the new position (x, y + 1),
Moving down will result in the new position (x, y - 1),
Moving right will result in the new position (x + 1, y),
Moving Left will result in the new position (x - 1, y).";

/// Renders positions as `[(x, y), (x, y), ...]`.
pub fn render_coordinates(points: &[Position]) -> String {
    let mut s = String::from("[");
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "({}, {})", p.x, p.y);
    }
    s.push(']');
    s
}

/// One demonstrated episode.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoBlock {
    /// 0-based episode index; rendered 1-based.
    pub episode: usize,
    pub coordinates: Vec<Position>,
    pub consumed_goal: Option<TargetColor>,
    /// Target value, or the episode score when no target was reached.
    pub value: f64,
}

impl DemoBlock {
    pub fn from_trajectory(trajectory: &Trajectory, grid: &Grid) -> Self {
        let value = match trajectory.consumed {
            Some(c) => grid.reward(c),
            None => trajectory.score,
        };
        Self {
            episode: trajectory.episode,
            coordinates: trajectory.positions(),
            consumed_goal: trajectory.consumed,
            value,
        }
    }

    pub fn trajectory_text(&self) -> String {
        render_coordinates(&self.coordinates)
    }

    pub fn render(&self) -> String {
        let head = format!("The trajectory of episode {}: {}.", self.episode + 1, self.trajectory_text());
        match self.consumed_goal {
            Some(goal) => format!("{head} The player collected goal {goal} with a score of {:.2}.", self.value),
            None => format!(
                "{head} The player did not collect any goal. The score of this episode is {:.2}.",
                self.value
            ),
        }
    }
}

/// Instruction, start position, demonstrations and the query for the next
/// episode.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptContext {
    pub instruction: String,
    pub start: Position,
    pub demonstrations: Vec<DemoBlock>,
}

impl PromptContext {
    pub fn new(start: Position) -> Self {
        Self {
            instruction: TASK_INSTRUCTION.to_string(),
            start,
            demonstrations: Vec::new(),
        }
    }

    pub fn push(&mut self, block: DemoBlock) {
        self.demonstrations.push(block);
    }

    /// 1-based number of the episode being asked about.
    pub fn query_episode(&self) -> usize {
        self.demonstrations.last().map_or(1, |d| d.episode + 2)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.instruction);
        s.push_str("\n\n");
        let _ = writeln!(
            s,
            "The (x,y)-coordinate of the starting position is ({}, {}).",
            self.start.x, self.start.y
        );
        for block in &self.demonstrations {
            s.push_str(&block.render());
            s.push('\n');
        }
        let _ = write!(
            s,
            "What is the trajectory the player would take in episode {}? Please provide only the trajectory in the format of coordinate pairs [x,y]. Do not explain the reason or include any other words.",
            self.query_episode()
        );
        s
    }
}

/// Builds the context from a player's history (episodes `0..j`).
pub fn build_prompt(history: &[Trajectory], grid: &Grid) -> Result<(PromptContext, String)> {
    if history.is_empty() {
        return Err(Error::Contract("a prompt needs at least one completed episode".into()));
    }
    let mut ctx = PromptContext::new(grid.start());
    for t in history {
        ctx.push(DemoBlock::from_trajectory(t, grid));
    }
    let text = ctx.render();
    Ok((ctx, text))
}
