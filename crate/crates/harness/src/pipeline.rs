//! Experiment stages. Each stage is a pure function of the configuration
//! and its inputs; the CLI wires them to the [`Store`].

use std::collections::BTreeMap;
use std::fs;

use anyhow::{Context, Result};
use gridmind_core::gridworld::generate_grid;
use gridmind_core::ibl::{self, IblParams};
use gridmind_core::llm::{self, Completer, PredictionSummary};
use gridmind_core::metrics::{self, MetricsReport};
use gridmind_core::seed;
use gridmind_core::synthetic::{generate_population, PopulationSpec};
use gridmind_core::trajectory::TrajectoryLine;
use gridmind_core::{Condition, Grid, PlayerRecord, Trajectory};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::store::{grid_index, match_predictions, model_slug, Store};

pub const IBL_MODEL: &str = "ibl";

pub fn llm_model_label(model_name: &str) -> String {
    format!("llm:{model_name}")
}

/// `grids_per_condition` grids for each condition, simple first.
pub fn generate_grids(cfg: &ExperimentConfig) -> Result<Vec<Grid>> {
    let jobs: Vec<(Condition, u64)> = [Condition::Simple, Condition::Complex]
        .into_iter()
        .flat_map(|c| (0..cfg.grids_per_condition as u64).map(move |i| (c, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(condition, i)| {
            let s = seed::derive(cfg.seed, &format!("grids/{condition}"), i);
            generate_grid(s, cfg.complexity.of(condition), cfg.obstacles, &cfg.task)
                .with_context(|| format!("generating {condition} grid {i}"))
        })
        .collect()
}

/// One population per (information mode, condition).
pub fn simulate(cfg: &ExperimentConfig, grids: &[Grid]) -> Result<Vec<PlayerRecord>> {
    let mix: Vec<_> = cfg.population.mix.iter().map(|m| (m.agent, m.weight)).collect();
    let mut players = Vec::new();
    for &info_mode in &cfg.population.info_modes {
        for condition in [Condition::Simple, Condition::Complex] {
            let spec = PopulationSpec {
                n_players: cfg.population.players_per_condition,
                condition,
                info_mode,
                mix: mix.clone(),
                seed: seed::derive(cfg.seed, &format!("population/{info_mode}/{condition}"), 0),
            };
            players.extend(generate_population(&spec, grids, &cfg.complexity, &cfg.task)?);
        }
    }
    Ok(players)
}

fn ibl_params(cfg: &ExperimentConfig) -> IblParams {
    IblParams {
        seed: seed::derive(cfg.seed, "ibl", cfg.ibl.seed),
        ..cfg.ibl.clone()
    }
}

/// IBL predictions for episodes 2..n of every player, ids suffixed `-ibl`.
pub fn predict_ibl(cfg: &ExperimentConfig, players: &[PlayerRecord], grids: &[Grid]) -> Result<Vec<TrajectoryLine>> {
    let by_id = grid_index(grids);
    let params = ibl_params(cfg);
    let per_player: Vec<Vec<TrajectoryLine>> = players
        .par_iter()
        .map(|p| {
            let grid = by_id
                .get(p.info.grid_id.as_str())
                .with_context(|| format!("player {} references unknown grid {}", p.player_id(), p.info.grid_id))?;
            let mut info = p.info.clone();
            info.player_id = format!("{}{}", p.player_id(), ibl::PLAYER_SUFFIX);
            info.agent = None;
            Ok(ibl::predict_player(p, grid, &cfg.task, &params)?
                .iter()
                .map(|t| t.to_line(&info))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_player.into_iter().flatten().collect())
}

/// LLM predictions through `completer`; failed queries are left out of the
/// lines and counted in the summary.
pub fn predict_llm(
    cfg: &ExperimentConfig,
    players: &[PlayerRecord],
    grids: &[Grid],
    completer: &dyn Completer,
) -> Result<(Vec<TrajectoryLine>, PredictionSummary)> {
    let by_id = grid_index(grids);
    let log = llm::predict_all(
        players,
        |id| by_id.get(id).copied(),
        completer,
        &cfg.task,
        cfg.endpoint.in_flight,
    )?;
    Ok((log.to_lines(players, &cfg.endpoint.model_name), log.summary()))
}

/// Scores `lines` against the observed players. Every observed player gets
/// a report; predictions for the first episode carry no history and are
/// skipped.
pub fn evaluate(
    cfg: &ExperimentConfig,
    players: &[PlayerRecord],
    grids: &[Grid],
    lines: &[TrajectoryLine],
    model: &str,
) -> Result<(Vec<MetricsReport>, usize)> {
    let scorable: Vec<TrajectoryLine> = lines.iter().filter(|l| l.episode > 0).cloned().collect();
    let skipped = lines.len() - scorable.len();
    let predictions = match_predictions(&scorable, players, grids, &cfg.task)?;
    let by_id = grid_index(grids);
    let empty = BTreeMap::<usize, Trajectory>::new();
    let reports = players
        .par_iter()
        .map(|p| {
            let grid = by_id
                .get(p.info.grid_id.as_str())
                .with_context(|| format!("unknown grid {}", p.info.grid_id))?;
            let preds = predictions.get(p.player_id()).unwrap_or(&empty);
            Ok(metrics::evaluate_player(p, preds, grid, model, cfg.metrics_epsilon, cfg.target_rule)?)
        })
        .collect::<Result<_>>()?;
    Ok((reports, skipped))
}

/// Writes `summary.csv`, one series CSV per group and `report.md`.
/// Returns the aggregation warnings.
pub fn write_report(store: &Store, reports: &[MetricsReport]) -> Result<Vec<String>> {
    let dir = store.report_dir();
    fs::create_dir_all(&dir)?;
    let (rows, warnings) = metrics::aggregate(reports);
    let mut csv = Vec::new();
    metrics::write_summary_csv(&mut csv, &rows)?;
    fs::write(dir.join("summary.csv"), csv)?;
    for (key, points) in metrics::series(reports) {
        let mut csv = Vec::new();
        metrics::write_series_csv(&mut csv, &points)?;
        let name = format!("series-{}-{}-{}.csv", key.experiment, key.condition, model_slug(&key.model));
        fs::write(dir.join(name), csv)?;
    }
    let mut md = String::from("# Prediction report\n\nKL in nats; SE is the standard error of the mean over players.\n\n");
    md.push_str(&metrics::render_markdown(&rows));
    for w in &warnings {
        md.push_str(&format!("- warning: {w}\n"));
    }
    fs::write(dir.join("report.md"), md)?;
    Ok(warnings)
}

/// Grids, population, IBL predictions, evaluation and report in one go.
pub fn run_offline(cfg: &ExperimentConfig, store: &Store) -> Result<()> {
    let grids = generate_grids(cfg)?;
    store.save_grids(&grids)?;
    let players = simulate(cfg, &grids)?;
    store.save_population(&players)?;
    let lines = predict_ibl(cfg, &players, &grids)?;
    store.save_predictions(IBL_MODEL, &lines)?;
    let (reports, _) = evaluate(cfg, &players, &grids, &lines, IBL_MODEL)?;
    store.save_reports(IBL_MODEL, &reports)?;
    write_report(store, &reports)?;
    Ok(())
}
