//! On-disk layout of an experiment directory.
//!
//! ```text
//! grids/<grid id>.json        one grid document each
//! players.jsonl               player metadata (condition, agent kind)
//! trajectories.jsonl          observed episodes, shared log format
//! predictions/<model>.jsonl   predicted episodes, shared log format
//! predictions/<model>.summary.json
//! reports/<model>.jsonl       per-player metric reports
//! report/                     summary.csv, series CSVs, report.md
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridmind_core::gridworld::GridFile;
use gridmind_core::metrics::MetricsReport;
use gridmind_core::trajectory::{group_players, read_jsonl, write_jsonl, PlayerInfo, TrajectoryLine};
use gridmind_core::{Grid, PlayerRecord, TaskConfig, Trajectory};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub struct Store {
    root: PathBuf,
}

/// File-name form of a model label (`llm:mistral` → `llm-mistral`).
pub fn model_slug(model: &str) -> String {
    model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '-' })
        .collect()
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn grids_dir(&self) -> PathBuf {
        self.root.join("grids")
    }

    pub fn players_path(&self) -> PathBuf {
        self.root.join("players.jsonl")
    }

    pub fn trajectories_path(&self) -> PathBuf {
        self.root.join("trajectories.jsonl")
    }

    pub fn predictions_path(&self, model: &str) -> PathBuf {
        self.root.join("predictions").join(format!("{}.jsonl", model_slug(model)))
    }

    pub fn prediction_summary_path(&self, model: &str) -> PathBuf {
        self.root.join("predictions").join(format!("{}.summary.json", model_slug(model)))
    }

    pub fn reports_path(&self, model: &str) -> PathBuf {
        self.root.join("reports").join(format!("{}.jsonl", model_slug(model)))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn save_grids(&self, grids: &[Grid]) -> Result<()> {
        let dir = self.grids_dir();
        fs::create_dir_all(&dir)?;
        for g in grids {
            let path = dir.join(format!("{}.json", g.id()));
            let mut text = serde_json::to_string_pretty(g)?;
            text.push('\n');
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    /// All grids, ordered by id.
    pub fn load_grids(&self) -> Result<Vec<Grid>> {
        let dir = self.grids_dir();
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let file: GridFile = serde_json::from_reader(BufReader::new(File::open(p)?))
                    .with_context(|| format!("parsing {}", p.display()))?;
                Grid::try_from(file).with_context(|| format!("validating {}", p.display()))
            })
            .collect()
    }

    pub fn save_population(&self, players: &[PlayerRecord]) -> Result<()> {
        let infos: Vec<&PlayerInfo> = players.iter().map(|p| &p.info).collect();
        write_lines(&self.players_path(), &infos)?;
        let lines: Vec<TrajectoryLine> = players.iter().flat_map(|p| p.to_lines()).collect();
        write_lines(&self.trajectories_path(), &lines)
    }

    /// Observed players with metadata from `players.jsonl` when present.
    pub fn load_population(&self, grids: &[Grid], task: &TaskConfig) -> Result<Vec<PlayerRecord>> {
        let lines: Vec<TrajectoryLine> = read_lines(&self.trajectories_path())?;
        let by_id = grid_index(grids);
        let mut players = group_players(&lines, |id| by_id.get(id).copied(), task)?;
        if self.players_path().exists() {
            let infos: Vec<PlayerInfo> = read_lines(&self.players_path())?;
            let infos: BTreeMap<&str, &PlayerInfo> = infos.iter().map(|i| (i.player_id.as_str(), i)).collect();
            for p in &mut players {
                if let Some(info) = infos.get(p.player_id()) {
                    p.info.agent = info.agent.clone();
                }
            }
        }
        Ok(players)
    }

    pub fn save_predictions(&self, model: &str, lines: &[TrajectoryLine]) -> Result<()> {
        write_lines(&self.predictions_path(model), lines)
    }

    pub fn load_prediction_lines(&self, model: &str) -> Result<Vec<TrajectoryLine>> {
        read_lines(&self.predictions_path(model))
    }

    pub fn save_reports(&self, model: &str, reports: &[MetricsReport]) -> Result<()> {
        write_lines(&self.reports_path(model), reports)
    }

    /// Every report file, in file-name order.
    pub fn load_all_reports(&self) -> Result<Vec<MetricsReport>> {
        let dir = self.root.join("reports");
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        paths.sort();
        let mut out = Vec::new();
        for p in paths {
            out.extend(read_lines::<MetricsReport>(&p)?);
        }
        Ok(out)
    }
}

pub fn grid_index(grids: &[Grid]) -> BTreeMap<&str, &Grid> {
    grids.iter().map(|g| (g.id(), g)).collect()
}

/// Matches prediction lines to observed players. A line's player id is the
/// observed id itself or the observed id followed by a model suffix
/// (`-ibl`, `-llm:<model>`).
pub fn match_predictions(
    lines: &[TrajectoryLine],
    players: &[PlayerRecord],
    grids: &[Grid],
    task: &TaskConfig,
) -> Result<BTreeMap<String, BTreeMap<usize, Trajectory>>> {
    let by_grid = grid_index(grids);
    let ids: BTreeMap<&str, &PlayerRecord> = players.iter().map(|p| (p.player_id(), p)).collect();
    let mut out: BTreeMap<String, BTreeMap<usize, Trajectory>> = BTreeMap::new();
    for line in lines {
        let Some(base) = base_player(&line.player_id, &ids) else {
            bail!("prediction for unknown player {}", line.player_id);
        };
        let grid = by_grid
            .get(line.grid_id.as_str())
            .with_context(|| format!("prediction references unknown grid {}", line.grid_id))?;
        if ids[base].info.grid_id != line.grid_id {
            bail!("prediction for {} uses grid {}, player played {}", base, line.grid_id, ids[base].info.grid_id);
        }
        let t = line
            .to_trajectory(grid, task)
            .with_context(|| format!("prediction {} episode {}", line.player_id, line.episode))?;
        if out.entry(base.to_string()).or_default().insert(line.episode, t).is_some() {
            bail!("duplicate prediction for {} episode {}", base, line.episode);
        }
    }
    Ok(out)
}

fn base_player<'a>(id: &str, ids: &BTreeMap<&'a str, &PlayerRecord>) -> Option<&'a str> {
    if let Some((k, _)) = ids.get_key_value(id) {
        return Some(k);
    }
    ids.keys()
        .filter(|k| {
            id.strip_prefix(**k)
                .is_some_and(|rest| rest == gridmind_core::ibl::PLAYER_SUFFIX || rest.starts_with("-llm:"))
        })
        .max_by_key(|k| k.len())
        .copied()
}

pub fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_jsonl(&mut w, items)?;
    w.flush()?;
    Ok(())
}

pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}
