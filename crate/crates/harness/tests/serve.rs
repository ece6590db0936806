use std::sync::Arc;

use gridmind::config::ExperimentConfig;
use gridmind::pipeline;
use gridmind::serve::{self, EpisodeResponse, ServeState, SessionResponse};
use gridmind::server::BackgroundServer;
use gridmind::store::Store;
use gridmind_core::gridworld::run_episode_with_mode;
use gridmind_core::synthetic::{make_policy, AgentKind, AgentSpec};
use gridmind_core::trajectory::{PlayerInfo, TrajectoryLine};
use gridmind_core::{Action, Grid, InfoMode, Position, Trajectory};
use reqwest::blocking::Client;
use serde_json::Value;

struct Fixture {
    _dir: tempfile::TempDir,
    store_root: std::path::PathBuf,
    server: BackgroundServer,
    grids: Vec<Grid>,
    cfg: ExperimentConfig,
}

fn start_in(dir: tempfile::TempDir, cfg: ExperimentConfig, static_dir: Option<&std::path::Path>) -> Fixture {
    let store = Store::new(dir.path());
    let grids = match store.load_grids() {
        Ok(g) => g,
        Err(_) => {
            let g = pipeline::generate_grids(&cfg).unwrap();
            store.save_grids(&g).unwrap();
            g
        }
    };
    let state = ServeState::new(
        Store::new(dir.path()),
        grids.clone(),
        &cfg.complexity,
        cfg.task.clone(),
        cfg.seed,
        cfg.serve.info_modes.clone(),
    )
    .unwrap();
    let server = BackgroundServer::spawn("127.0.0.1:0".parse().unwrap(), serve::router(Arc::new(state), static_dir)).unwrap();
    Fixture {
        store_root: dir.path().to_path_buf(),
        _dir: dir,
        server,
        grids,
        cfg,
    }
}

fn start() -> Fixture {
    let cfg = ExperimentConfig {
        grids_per_condition: 2,
        ..ExperimentConfig::default()
    };
    start_in(tempfile::tempdir().unwrap(), cfg, None)
}

fn session(f: &Fixture) -> SessionResponse {
    Client::new()
        .get(format!("{}/api/session", f.server.url()))
        .send()
        .unwrap()
        .error_for_status()
        .unwrap()
        .json()
        .unwrap()
}

fn post(f: &Fixture, body: String) -> (u16, Value) {
    let resp = Client::new()
        .post(format!("{}/api/episode", f.server.url()))
        .header("content-type", "application/json")
        .body(body)
        .send()
        .unwrap();
    (resp.status().as_u16(), resp.json().unwrap())
}

/// A legal episode on the session's grid from a seeded explorer.
fn play(f: &Fixture, s: &SessionResponse, episode: usize) -> TrajectoryLine {
    let grid = f.grids.iter().find(|g| g.id() == s.grid.id).unwrap();
    let mut policy = make_policy(&AgentSpec::new(AgentKind::EpsilonExplorer { epsilon: 0.3 }, episode as u64), grid).unwrap();
    let t = run_episode_with_mode(grid, &mut policy, &f.cfg.task, episode, s.info_mode).unwrap();
    t.to_line(&PlayerInfo {
        player_id: s.player_id.clone(),
        condition: s.condition,
        info_mode: s.info_mode,
        grid_id: s.grid.id.clone(),
        agent: None,
    })
}

#[test]
fn sessions_alternate_conditions_and_rotate_modes() {
    let f = start();
    let s: Vec<SessionResponse> = (0..4).map(|_| session(&f)).collect();
    let ids: Vec<&str> = s.iter().map(|x| x.player_id.as_str()).collect();
    assert_eq!(ids, ["web-00000", "web-00001", "web-00002", "web-00003"]);
    assert_ne!(s[0].condition, s[1].condition);
    assert_eq!(s[0].info_mode, InfoMode::Full);
    assert_eq!(s[2].info_mode, InfoMode::Restricted);
    for x in &s {
        let grid = f.grids.iter().find(|g| g.id() == x.grid.id).unwrap();
        assert_eq!(grid.complexity(), f.cfg.complexity.of(x.condition));
        assert_eq!(x.task.t_max, 31);
        assert_eq!(x.episode, 0);
    }
}

#[test]
fn legal_upload_is_persisted_byte_identically() {
    let f = start();
    let s = session(&f);
    let line = play(&f, &s, 0);
    let body = serde_json::to_string(&line).unwrap();
    let (status, json) = post(&f, body.clone());
    assert_eq!(status, 200, "{json}");
    let r: EpisodeResponse = serde_json::from_value(json).unwrap();
    assert_eq!((r.episode, r.episodes_completed, r.finished), (0, 1, false));
    assert!((r.score - line.score).abs() < 1e-12);
    let stored = std::fs::read_to_string(f.store_root.join("trajectories.jsonl")).unwrap();
    assert_eq!(stored, format!("{body}\n"));
}

#[test]
fn step_through_obstacle_is_rejected_with_its_index() {
    let f = start();
    let s = session(&f);
    let grid = f.grids.iter().find(|g| g.id() == s.grid.id).unwrap();
    let mut line = play(&f, &s, 0);
    // Claim the agent stands on an obstacle at step 1.
    let wall = grid.obstacles().iter().next().copied().unwrap();
    line.steps.truncate(1);
    line.steps.push((wall.x, wall.y, Action::Up));
    let (status, json) = post(&f, serde_json::to_string(&line).unwrap());
    assert_eq!(status, 400);
    assert_eq!(json["step_index"], 1);
    assert!(json["error"].as_str().unwrap().contains("obstacle"));
    assert!(!f.store_root.join("trajectories.jsonl").exists());
}

#[test]
fn unproducible_episodes_are_rejected() {
    let f = start();
    let s = session(&f);
    let mut line = play(&f, &s, 0);
    line.score += 1.0;
    assert_eq!(post(&f, serde_json::to_string(&line).unwrap()).0, 400);
    // Stopping short of both a target and the step limit.
    let grid = f.grids.iter().find(|g| g.id() == s.grid.id).unwrap();
    let full = play(&f, &s, 0);
    let mut pairs: Vec<_> = full.steps.iter().map(|&(x, y, a)| (Position::new(x, y), a)).collect();
    pairs.pop();
    let short = Trajectory::replay(grid, &f.cfg.task, 0, &pairs).unwrap().to_line(&full.info());
    let (status, json) = post(&f, serde_json::to_string(&short).unwrap());
    assert_eq!(status, 400, "{json}");
    assert_eq!(post(&f, "{not json".into()).0, 400);
    let mut stranger = play(&f, &s, 0);
    stranger.player_id = "nobody".into();
    assert_eq!(post(&f, serde_json::to_string(&stranger).unwrap()).0, 404);
}

#[test]
fn episodes_must_arrive_in_order_and_stop_at_forty() {
    let f = start();
    let s = session(&f);
    let skip = play(&f, &s, 1);
    assert_eq!(post(&f, serde_json::to_string(&skip).unwrap()).0, 409);
    for e in 0..40 {
        let (status, json) = post(&f, serde_json::to_string(&play(&f, &s, e)).unwrap());
        assert_eq!(status, 200, "episode {e}: {json}");
        assert_eq!(json["finished"], e == 39);
    }
    let (status, json) = post(&f, serde_json::to_string(&play(&f, &s, 40)).unwrap());
    assert_eq!(status, 409);
    assert!(json["error"].as_str().unwrap().contains("cap"));
    let lines = std::fs::read_to_string(f.store_root.join("trajectories.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 40);
}

#[test]
fn restart_resumes_sessions_from_the_store() {
    let f = start();
    let s = session(&f);
    assert_eq!(post(&f, serde_json::to_string(&play(&f, &s, 0)).unwrap()).0, 200);
    let Fixture { _dir, cfg, server, .. } = f;
    drop(server);
    let f = start_in(_dir, cfg, None);
    assert_eq!(post(&f, serde_json::to_string(&play(&f, &s, 0)).unwrap()).0, 409);
    assert_eq!(post(&f, serde_json::to_string(&play(&f, &s, 1)).unwrap()).0, 200);
    assert_eq!(session(&f).player_id, "web-00001");
    // The store loads back as a population.
    let players = Store::new(&f.store_root).load_population(&f.grids, &f.cfg.task).unwrap();
    assert_eq!(players.len(), 1);
    assert_eq!(players[0].trajectories.len(), 2);
}

#[test]
fn static_files_are_served_under_root() {
    let f = start();
    let page = Client::new().get(f.server.url()).send().unwrap();
    assert_eq!(page.status().as_u16(), 200);
    assert!(page.text().unwrap().contains("static_dir"));

    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<p>ui</p>").unwrap();
    let cfg = ExperimentConfig {
        grids_per_condition: 2,
        ..ExperimentConfig::default()
    };
    let g = start_in(tempfile::tempdir().unwrap(), cfg, Some(ui.path()));
    assert_eq!(Client::new().get(g.server.url()).send().unwrap().text().unwrap(), "<p>ui</p>");
    assert_eq!(Client::new().get(format!("{}/api/session", g.server.url())).send().unwrap().status().as_u16(), 200);
}
