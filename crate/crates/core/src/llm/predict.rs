use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::ground::{ground_trajectory, RepairCounts};
use super::parse::parse_trajectory;
use super::prompt::{DemoBlock, PromptContext};
use crate::error::{Error, Result};
use crate::gridworld::{Grid, TaskConfig};
use crate::trajectory::{PlayerRecord, Trajectory, TrajectoryLine};

pub type CompletionFailure = Box<dyn std::error::Error + Send + Sync>;

/// A text-completion backend. Implementations handle their own retries.
pub trait Completer: Sync {
    fn complete(&self, prompt: &str) -> std::result::Result<String, CompletionFailure>;
}

impl<F> Completer for F
where
    F: Fn(&str) -> std::result::Result<String, CompletionFailure> + Sync,
{
    fn complete(&self, prompt: &str) -> std::result::Result<String, CompletionFailure> {
        self(prompt)
    }
}

pub fn player_suffix(model: &str) -> String {
    format!("-llm:{model}")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    Grounded {
        trajectory: Trajectory,
        repairs: RepairCounts,
        queries: usize,
    },
    Missing {
        reason: String,
        queries: usize,
    },
}

impl Prediction {
    pub fn queries(&self) -> usize {
        match self {
            Prediction::Grounded { queries, .. } | Prediction::Missing { queries, .. } => *queries,
        }
    }

    pub fn trajectory(&self) -> Option<&Trajectory> {
        match self {
            Prediction::Grounded { trajectory, .. } => Some(trajectory),
            Prediction::Missing { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub predicted: usize,
    pub missing: usize,
    pub queries: usize,
    pub requeries: usize,
    pub repairs: RepairCounts,
}

/// Predictions keyed by `(player_id, episode)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionLog {
    pub entries: BTreeMap<(String, usize), Prediction>,
}

impl PredictionLog {
    pub fn summary(&self) -> PredictionSummary {
        let mut s = PredictionSummary::default();
        for p in self.entries.values() {
            s.queries += p.queries();
            s.requeries += p.queries().saturating_sub(1);
            match p {
                Prediction::Grounded { repairs, .. } => {
                    s.predicted += 1;
                    s.repairs += *repairs;
                }
                Prediction::Missing { .. } => s.missing += 1,
            }
        }
        s
    }

    /// Grounded predictions as trajectory log lines, player ids suffixed with
    /// `-llm:<model>`.
    pub fn to_lines(&self, players: &[PlayerRecord], model: &str) -> Vec<TrajectoryLine> {
        let suffix = player_suffix(model);
        let infos: BTreeMap<&str, _> = players.iter().map(|p| (p.player_id(), &p.info)).collect();
        self.entries
            .iter()
            .filter_map(|((player, _), pred)| {
                let mut info = (*infos.get(player.as_str())?).clone();
                info.player_id = format!("{player}{suffix}");
                info.agent = None;
                Some(pred.trajectory()?.to_line(&info))
            })
            .collect()
    }
}

fn query_and_ground(
    ctx: &PromptContext,
    grid: &Grid,
    completer: &dyn Completer,
    task: &TaskConfig,
    episode: usize,
) -> Prediction {
    let prompt = ctx.render();
    let mut queries = 0;
    // One re-query when the completion holds no coordinates.
    for _ in 0..2 {
        queries += 1;
        let text = match completer.complete(&prompt) {
            Ok(text) => text,
            Err(e) => {
                return Prediction::Missing {
                    reason: e.to_string(),
                    queries,
                }
            }
        };
        match parse_trajectory(&text) {
            Ok(coords) => {
                let g = ground_trajectory(&coords, grid, task, episode);
                return Prediction::Grounded {
                    trajectory: g.trajectory,
                    repairs: g.repairs,
                    queries,
                };
            }
            Err(Error::EmptyOutput) => continue,
            Err(e) => {
                return Prediction::Missing {
                    reason: e.to_string(),
                    queries,
                }
            }
        }
    }
    Prediction::Missing {
        reason: Error::EmptyOutput.to_string(),
        queries,
    }
}

/// Predicts episodes `1..n` of one player. The context starts with the
/// instruction and start cell and grows by one demonstration per episode,
/// so the query for episode `j` sees only episodes before `j`.
pub fn predict_player(
    player: &PlayerRecord,
    grid: &Grid,
    completer: &dyn Completer,
    task: &TaskConfig,
) -> Vec<(usize, Prediction)> {
    let mut ctx = PromptContext::new(grid.start());
    let mut out = Vec::with_capacity(player.trajectories.len().saturating_sub(1));
    for j in 1..player.trajectories.len() {
        ctx.push(DemoBlock::from_trajectory(&player.trajectories[j - 1], grid));
        out.push((j, query_and_ground(&ctx, grid, completer, task, j)));
    }
    out
}

/// Runs [`predict_player`] over all players with at most `in_flight` players
/// querying concurrently. Failed queries become [`Prediction::Missing`].
pub fn predict_all<'g>(
    players: &[PlayerRecord],
    grid_for: impl Fn(&str) -> Option<&'g Grid> + Sync,
    completer: &dyn Completer,
    task: &TaskConfig,
    in_flight: usize,
) -> Result<PredictionLog> {
    let mut grids = Vec::with_capacity(players.len());
    for p in players {
        let g = grid_for(&p.info.grid_id)
            .ok_or_else(|| Error::Contract(format!("player {} references unknown grid {}", p.player_id(), p.info.grid_id)))?;
        grids.push(g);
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(BTreeMap::new());
    std::thread::scope(|scope| {
        for _ in 0..in_flight.clamp(1, players.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(player) = players.get(i) else { break };
                let preds = predict_player(player, grids[i], completer, task);
                let mut map = results.lock().expect("results lock");
                for (j, p) in preds {
                    map.insert((player.player_id().to_string(), j), p);
                }
            });
        }
    });
    Ok(PredictionLog {
        entries: results.into_inner().expect("results lock"),
    })
}
