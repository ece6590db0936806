//! Human-behavior prediction toolkit for goal-seeking gridworld tasks.
//!
//! The crate is organized around the shared trajectory log format:
//!
//! - [`gridworld`]: the 10×10 maze, its dynamics, observation modes and
//!   complexity-controlled generation.
//! - [`trajectory`]: episode records, player records and their JSON Lines
//!   wire format.
//! - [`ibl`]: an instance-based learning observer that predicts the next
//!   episode from pre-populated memory.
//! - [`llm`]: prompt construction, completion parsing and grounding for
//!   language-model predictors. Transport lives outside this crate behind
//!   the [`llm::Completer`] trait.
//! - [`metrics`]: trajectory KL divergence, target accuracy and exploration
//!   entropy difference.
//! - [`synthetic`]: scripted agent populations used as verification oracles.

pub mod error;
pub mod gridworld;
pub mod ibl;
pub mod llm;
pub mod metrics;
pub mod seed;
pub mod synthetic;
pub mod trajectory;

pub use error::{Error, Result};
pub use gridworld::{Action, Grid, Position, TargetColor, TaskConfig};
pub use trajectory::{Condition, InfoMode, PlayerRecord, Trajectory};
