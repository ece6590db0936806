//! Ingestion server for the browser experiment.
//!
//! `GET /api/session` assigns a new player a condition, information mode and
//! grid. `POST /api/episode` accepts one finished episode in the shared log
//! format, checks it against the assigned grid and appends it to
//! `trajectories.jsonl`.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use anyhow::{bail, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gridmind_core::gridworld::GridFile;
use gridmind_core::seed;
use gridmind_core::synthetic::ConditionComplexity;
use gridmind_core::trajectory::{PlayerInfo, TrajectoryLine};
use gridmind_core::{Condition, Error as CoreError, Grid, InfoMode, TaskConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{read_lines, Store};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub t_max: usize,
    pub episodes: usize,
    pub step_cost: f64,
    pub obstacle_penalty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResponse {
    pub player_id: String,
    pub condition: Condition,
    pub info_mode: InfoMode,
    pub grid: GridFile,
    pub task: TaskView,
    /// 0-based index of the next episode to upload.
    pub episode: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResponse {
    pub player_id: String,
    pub episode: usize,
    pub episodes_completed: usize,
    pub score: f64,
    pub finished: bool,
}

struct Session {
    info: PlayerInfo,
    completed: usize,
    score: f64,
}

struct Inner {
    sessions: BTreeMap<String, Session>,
    issued: u64,
}

pub struct ServeState {
    grids: BTreeMap<String, Grid>,
    pools: BTreeMap<Condition, Vec<String>>,
    task: TaskConfig,
    seed: u64,
    info_modes: Vec<InfoMode>,
    store: Store,
    inner: Mutex<Inner>,
}

#[derive(Debug)]
struct Rejection {
    status: StatusCode,
    message: String,
    step_index: Option<usize>,
}

impl Rejection {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            step_index: None,
        }
    }
}

impl IntoResponse for Rejection {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(i) = self.step_index {
            body["step_index"] = json!(i);
        }
        (self.status, Json(body)).into_response()
    }
}

impl ServeState {
    /// Builds the state from the grids in `store`, resuming any sessions
    /// already recorded there.
    pub fn new(
        store: Store,
        grids: Vec<Grid>,
        complexity: &ConditionComplexity,
        task: TaskConfig,
        seed: u64,
        info_modes: Vec<InfoMode>,
    ) -> Result<Self> {
        let mut pools: BTreeMap<Condition, Vec<String>> = BTreeMap::new();
        for condition in [Condition::Simple, Condition::Complex] {
            let ids: Vec<String> = grids
                .iter()
                .filter(|g| g.complexity() == complexity.of(condition))
                .map(|g| g.id().to_string())
                .collect();
            if ids.is_empty() {
                bail!("no grids with complexity {} for condition {condition}", complexity.of(condition));
            }
            pools.insert(condition, ids);
        }
        if info_modes.is_empty() {
            bail!("no information modes to assign");
        }
        let mut sessions = BTreeMap::new();
        if store.players_path().exists() {
            for info in read_lines::<PlayerInfo>(&store.players_path())? {
                sessions.insert(
                    info.player_id.clone(),
                    Session {
                        info,
                        completed: 0,
                        score: 0.0,
                    },
                );
            }
        }
        if store.trajectories_path().exists() {
            for line in read_lines::<TrajectoryLine>(&store.trajectories_path())? {
                if let Some(s) = sessions.get_mut(&line.player_id) {
                    s.completed += 1;
                    s.score += line.score;
                }
            }
        }
        let issued = sessions.len() as u64;
        Ok(Self {
            grids: grids.into_iter().map(|g| (g.id().to_string(), g)).collect(),
            pools,
            task,
            seed,
            info_modes,
            store,
            inner: Mutex::new(Inner { sessions, issued }),
        })
    }

    fn task_view(&self) -> TaskView {
        TaskView {
            t_max: self.task.t_max,
            episodes: self.task.episodes,
            step_cost: self.task.step_cost,
            obstacle_penalty: self.task.obstacle_penalty,
        }
    }

    /// Session `k` alternates conditions, rotates information modes every
    /// two sessions and draws its grid from the condition's pool.
    fn new_session(&self) -> Result<SessionResponse, Rejection> {
        let mut inner = self.inner.lock().expect("session lock");
        let k = inner.issued;
        let condition = if k.is_multiple_of(2) { Condition::Simple } else { Condition::Complex };
        let info_mode = self.info_modes[((k / 2) as usize) % self.info_modes.len()];
        let pool = &self.pools[&condition];
        let grid_id = pool[seed::substream(self.seed, "serve/grid", k).random_range(0..pool.len())].clone();
        let info = PlayerInfo {
            player_id: format!("web-{k:05}"),
            condition,
            info_mode,
            grid_id: grid_id.clone(),
            agent: None,
        };
        append_line(&self.store.players_path(), &info)
            .map_err(|e| Rejection::new(StatusCode::INTERNAL_SERVER_ERROR, format!("store write failed: {e}")))?;
        inner.issued += 1;
        inner.sessions.insert(
            info.player_id.clone(),
            Session {
                info: info.clone(),
                completed: 0,
                score: 0.0,
            },
        );
        Ok(SessionResponse {
            player_id: info.player_id,
            condition,
            info_mode,
            grid: self.grids[&grid_id].to_file(),
            task: self.task_view(),
            episode: 0,
            score: 0.0,
        })
    }

    fn accept_episode(&self, body: &[u8]) -> Result<EpisodeResponse, Rejection> {
        let line: TrajectoryLine = serde_json::from_slice(body)
            .map_err(|e| Rejection::new(StatusCode::BAD_REQUEST, format!("malformed episode: {e}")))?;
        let mut inner = self.inner.lock().expect("session lock");
        let session = inner
            .sessions
            .get_mut(&line.player_id)
            .ok_or_else(|| Rejection::new(StatusCode::NOT_FOUND, format!("unknown player {}", line.player_id)))?;
        let info = &session.info;
        if line.grid_id != info.grid_id || line.condition != info.condition || line.info_mode != info.info_mode {
            return Err(Rejection::new(
                StatusCode::BAD_REQUEST,
                "grid, condition or info mode differs from the session assignment",
            ));
        }
        if session.completed >= self.task.episodes {
            return Err(Rejection::new(
                StatusCode::CONFLICT,
                format!("episode cap of {} reached", self.task.episodes),
            ));
        }
        if line.episode != session.completed {
            return Err(Rejection::new(
                StatusCode::CONFLICT,
                format!("expected episode {}, got {}", session.completed, line.episode),
            ));
        }
        let grid = &self.grids[&info.grid_id];
        line.to_trajectory(grid, &self.task)
            .and_then(|t| t.check_producible(grid, &self.task))
            .map_err(|e| {
                let step_index = match &e {
                    CoreError::IllegalTrajectory { step, .. } => Some(*step),
                    _ => None,
                };
                Rejection {
                    status: StatusCode::BAD_REQUEST,
                    message: e.to_string(),
                    step_index,
                }
            })?;
        append_line(&self.store.trajectories_path(), &line)
            .map_err(|e| Rejection::new(StatusCode::INTERNAL_SERVER_ERROR, format!("store write failed: {e}")))?;
        session.completed += 1;
        session.score += line.score;
        Ok(EpisodeResponse {
            player_id: line.player_id,
            episode: line.episode,
            episodes_completed: session.completed,
            score: session.score,
            finished: session.completed >= self.task.episodes,
        })
    }
}

/// Appends one JSON line in a single write; on failure the file is cut
/// back to its previous length.
fn append_line<T: Serialize>(path: &Path, item: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = serde_json::to_vec(item)?;
    buf.push(b'\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let before = f.metadata()?.len();
    if let Err(e) = f.write_all(&buf).and_then(|_| f.sync_data()) {
        let _ = f.set_len(before);
        return Err(e.into());
    }
    Ok(())
}

async fn session(State(state): State<Arc<ServeState>>) -> Response {
    match tokio::task::block_in_place(|| state.new_session()) {
        Ok(s) => Json(s).into_response(),
        Err(r) => r.into_response(),
    }
}

async fn episode(State(state): State<Arc<ServeState>>, body: Bytes) -> Response {
    match tokio::task::block_in_place(|| state.accept_episode(&body)) {
        Ok(r) => Json(r).into_response(),
        Err(r) => r.into_response(),
    }
}

const PLACEHOLDER_PAGE: &str = "<!doctype html>\n<meta charset=\"utf-8\">\n<title>gridmind</title>\n<p>No UI bundle is configured. Set <code>serve.static_dir</code> to the built web UI.</p>\n";

pub fn router(state: Arc<ServeState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/session", get(session))
        .route("/api/episode", post(episode))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ([(header::CACHE_CONTROL, "no-store")], Html(PLACEHOLDER_PAGE)) }),
    }
}
