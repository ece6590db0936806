//! Language-model trajectory predictor.
//!
//! A prompt holds the task instruction, the start cell and every completed
//! episode; the completion is parsed for coordinate pairs and grounded into a
//! legal episode. Transport is abstracted behind [`Completer`].

mod ground;
mod parse;
mod predict;
mod prompt;

pub use ground::{ground_trajectory, Grounded, RepairCounts};
pub use parse::parse_trajectory;
pub use predict::{
    player_suffix, predict_all, predict_player, Completer, CompletionFailure, Prediction, PredictionLog, PredictionSummary,
};
pub use prompt::{build_prompt, render_coordinates, DemoBlock, PromptContext, TASK_INSTRUCTION};
