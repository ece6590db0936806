//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export wraps a plain function returning `Result<_, String>` so the
//! logic also runs and is tested natively.

use gridmind_core::gridworld::generate_grid;
use gridmind_core::ibl::{self, activation, IblParams, Instance, MemoryStore};
use gridmind_core::metrics::{prediction_accuracy, predicted_target, trajectory_kl, TargetRule, DEFAULT_EPSILON};
use gridmind_core::synthetic::{generate_player, AgentKind, AgentSpec};
use gridmind_core::{Action, Condition, Grid, InfoMode, Position, TargetColor, TaskConfig, Trajectory};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct EpisodeView {
    /// 1-based.
    pub episode: usize,
    pub path: Vec<(i32, i32)>,
    pub consumed: Option<TargetColor>,
    pub score: f64,
}

impl EpisodeView {
    fn of(t: &Trajectory) -> Self {
        Self {
            episode: t.episode + 1,
            path: t.positions().iter().map(|p| (p.x, p.y)).collect(),
            consumed: t.consumed,
            score: t.score,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub agent: String,
    pub observed: Vec<EpisodeView>,
    /// IBL predictions for episodes 2 onward.
    pub predicted: Vec<EpisodeView>,
    pub kl: Vec<f64>,
    pub accuracy: Option<f64>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A grid with the requested decision complexity, as its JSON document.
pub fn grid_json(seed: u32, complexity: i32, obstacles: u32) -> Result<String, String> {
    let grid = generate_grid(u64::from(seed), complexity, obstacles as usize, &TaskConfig::default()).map_err(err)?;
    serde_json::to_string(&grid.to_file()).map_err(err)
}

pub fn parse_agent(name: &str, epsilon: f64) -> Result<AgentKind, String> {
    match name {
        "optimal" => Ok(AgentKind::Optimal),
        "satisficing" => Ok(AgentKind::Satisficing),
        "explorer" => Ok(AgentKind::EpsilonExplorer { epsilon }),
        other => Err(format!("unknown agent {other:?}; expected optimal, satisficing or explorer")),
    }
}

/// Plays `episodes` episodes with a synthetic agent and predicts episodes
/// 2 onward with the IBL observer.
pub fn session(grid: &Grid, agent: AgentKind, seed: u32, episodes: u32) -> Result<SessionView, String> {
    let task = TaskConfig {
        episodes: episodes.clamp(2, 40) as usize,
        ..TaskConfig::default()
    };
    let spec = AgentSpec::new(agent, u64::from(seed));
    let player = generate_player("demo", grid, Condition::Simple, InfoMode::Full, &spec, &task).map_err(err)?;
    let params = IblParams {
        seed: u64::from(seed),
        ..IblParams::default()
    };
    let predicted = ibl::predict_player(&player, grid, &task, &params).map_err(err)?;
    let observed = &player.trajectories;
    let kl = predicted
        .iter()
        .map(|p| trajectory_kl(&observed[p.episode], p, DEFAULT_EPSILON))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let accuracy = prediction_accuracy(
        predicted
            .iter()
            .map(|p| (predicted_target(p, grid, TargetRule::Nearest), observed[p.episode].consumed)),
    )
    .ok()
    .map(|e| e.mean);
    Ok(SessionView {
        agent: agent.to_string(),
        observed: observed.iter().map(EpisodeView::of).collect(),
        predicted: predicted.iter().map(EpisodeView::of).collect(),
        kl,
        accuracy,
    })
}

pub fn session_json(grid: &str, agent: &str, epsilon: f64, seed: u32, episodes: u32) -> Result<String, String> {
    let grid: Grid = serde_json::from_str(grid).map_err(err)?;
    let view = session(&grid, parse_agent(agent, epsilon)?, seed, episodes)?;
    serde_json::to_string(&view).map_err(err)
}

/// Activation of a single stored instance after gaps `1..=max_gap`, no noise.
pub fn decay_curve(decay: f64, max_gap: u32) -> Result<Vec<f64>, String> {
    let params = IblParams {
        decay,
        ..IblParams::default()
    };
    params.validate().map_err(err)?;
    let mut memory = MemoryStore::new();
    memory.record(Instance::new(Position::new(0, 0), Action::Up, 0.0));
    (1..=u64::from(max_gap))
        .map(|gap| activation(&memory, 0, gap, &params, 0.5).map_err(err))
        .collect()
}

#[wasm_bindgen(js_name = generateGrid)]
pub fn generate_grid_js(seed: u32, complexity: i32, obstacles: u32) -> Result<String, JsValue> {
    grid_json(seed, complexity, obstacles).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = playSession)]
pub fn play_session_js(grid: &str, agent: &str, epsilon: f64, seed: u32, episodes: u32) -> Result<String, JsValue> {
    session_json(grid, agent, epsilon, seed, episodes).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = activationCurve)]
pub fn activation_curve_js(decay: f64, max_gap: u32) -> Result<Vec<f64>, JsValue> {
    decay_curve(decay, max_gap).map_err(|e| JsValue::from_str(&e))
}
