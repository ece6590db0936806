//! Per-player reports and grouped summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{entropy_difference, predicted_target, prediction_accuracy, trajectory_kl, Estimate, TargetRule, ENTROPY_EPISODES};
use crate::error::{Error, Result};
use crate::gridworld::{Grid, TargetColor};
use crate::trajectory::{Condition, InfoMode, PlayerRecord, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// 0-based episode index.
    pub episode: usize,
    pub kl: Option<f64>,
    /// `None` when the prediction is missing or the player timed out.
    pub accurate: Option<bool>,
    pub predicted_target: Option<TargetColor>,
    pub observed_target: Option<TargetColor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub player_id: String,
    pub condition: Condition,
    pub info_mode: InfoMode,
    pub model: String,
    pub per_episode: Vec<EpisodeMetrics>,
    pub mean_kl: Option<Estimate>,
    pub accuracy: Option<Estimate>,
    pub entropy_difference: Option<f64>,
    pub missing: usize,
}

/// Scores one player's predictions, keyed by 0-based episode. Episode 0 has
/// no history and is never scored; every later episode without a prediction
/// counts as missing.
pub fn evaluate_player(
    observed: &PlayerRecord,
    predictions: &BTreeMap<usize, Trajectory>,
    grid: &Grid,
    model: &str,
    epsilon: f64,
    rule: TargetRule,
) -> Result<MetricsReport> {
    let n = observed.trajectories.len();
    if let Some(&e) = predictions.keys().find(|&&e| e == 0 || e >= n) {
        return Err(Error::Contract(format!(
            "prediction for episode {e} of player {} has no scorable observation",
            observed.player_id()
        )));
    }
    let mut per_episode = Vec::with_capacity(n.saturating_sub(1));
    for (e, obs) in observed.trajectories.iter().enumerate().skip(1) {
        let Some(pred) = predictions.get(&e) else {
            per_episode.push(EpisodeMetrics {
                episode: e,
                kl: None,
                accurate: None,
                predicted_target: None,
                observed_target: obs.consumed,
            });
            continue;
        };
        let target = predicted_target(pred, grid, rule);
        per_episode.push(EpisodeMetrics {
            episode: e,
            kl: Some(trajectory_kl(obs, pred, epsilon)?),
            accurate: obs.consumed.map(|c| target == Some(c)),
            predicted_target: target,
            observed_target: obs.consumed,
        });
    }
    let kls: Vec<f64> = per_episode.iter().filter_map(|m| m.kl).collect();
    let accuracy = prediction_accuracy(
        per_episode
            .iter()
            .filter(|m| m.kl.is_some())
            .map(|m| (m.predicted_target, m.observed_target)),
    )
    .ok();
    // Entropy over the leading episodes that have a prediction.
    let early: Vec<usize> = (1..n.min(ENTROPY_EPISODES)).filter(|e| predictions.contains_key(e)).collect();
    let entropy = entropy_difference(
        early.iter().map(|e| &predictions[e]),
        early.iter().map(|e| &observed.trajectories[*e]),
    );
    Ok(MetricsReport {
        player_id: observed.player_id().to_string(),
        condition: observed.info.condition,
        info_mode: observed.info.info_mode,
        model: model.to_string(),
        missing: per_episode.iter().filter(|m| m.kl.is_none()).count(),
        per_episode,
        mean_kl: Estimate::mean_of(&kls),
        accuracy,
        entropy_difference: entropy,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub experiment: InfoMode,
    pub condition: Condition,
    pub model: String,
}

impl GroupKey {
    pub fn of(report: &MetricsReport) -> Self {
        Self {
            experiment: report.info_mode,
            condition: report.condition,
            model: report.model.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub key: GroupKey,
    pub metric: String,
    pub estimate: Estimate,
    /// Missing predictions across the group.
    pub missing: usize,
}

pub const METRICS: [&str; 3] = ["kl", "accuracy", "entropy_difference"];

/// Group means over players with standard errors. Metrics no player in a
/// group defines are omitted and reported in the returned warnings.
pub fn aggregate(reports: &[MetricsReport]) -> (Vec<SummaryRow>, Vec<String>) {
    let mut groups: BTreeMap<GroupKey, Vec<&MetricsReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(GroupKey::of(r)).or_default().push(r);
    }
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (key, members) in groups {
        let missing = members.iter().map(|r| r.missing).sum();
        for metric in METRICS {
            let values: Vec<f64> = members
                .iter()
                .filter_map(|r| match metric {
                    "kl" => r.mean_kl.map(|e| e.mean),
                    "accuracy" => r.accuracy.map(|e| e.mean),
                    _ => r.entropy_difference,
                })
                .collect();
            match Estimate::mean_of(&values) {
                Some(estimate) => rows.push(SummaryRow {
                    key: key.clone(),
                    metric: metric.to_string(),
                    estimate,
                    missing,
                }),
                None => warnings.push(format!(
                    "{} / {} / {}: no player defines {metric}",
                    key.experiment, key.condition, key.model
                )),
            }
        }
    }
    (rows, warnings)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    /// 1-based episode number.
    pub episode: usize,
    pub metric: String,
    pub estimate: Estimate,
}

/// Per-episode curves for each group: mean KL with its standard error, and
/// accuracy with the binomial error.
pub fn series(reports: &[MetricsReport]) -> BTreeMap<GroupKey, Vec<SeriesPoint>> {
    let mut kl: BTreeMap<(GroupKey, usize), Vec<f64>> = BTreeMap::new();
    let mut hits: BTreeMap<(GroupKey, usize), (usize, usize)> = BTreeMap::new();
    for r in reports {
        let key = GroupKey::of(r);
        for m in &r.per_episode {
            if let Some(v) = m.kl {
                kl.entry((key.clone(), m.episode)).or_default().push(v);
            }
            if let Some(a) = m.accurate {
                let h = hits.entry((key.clone(), m.episode)).or_default();
                h.0 += usize::from(a);
                h.1 += 1;
            }
        }
    }
    let mut out: BTreeMap<GroupKey, Vec<SeriesPoint>> = BTreeMap::new();
    for ((key, e), values) in kl {
        if let Some(estimate) = Estimate::mean_of(&values) {
            out.entry(key).or_default().push(SeriesPoint {
                episode: e + 1,
                metric: "kl".into(),
                estimate,
            });
        }
    }
    for ((key, e), (h, n)) in hits {
        if let Some(estimate) = Estimate::proportion(h, n) {
            out.entry(key).or_default().push(SeriesPoint {
                episode: e + 1,
                metric: "accuracy".into(),
                estimate,
            });
        }
    }
    for points in out.values_mut() {
        points.sort_by(|a, b| (a.episode, &a.metric).cmp(&(b.episode, &b.metric)));
    }
    out
}

/// `experiment, condition, model, metric, mean, se, n`
pub fn write_summary_csv(writer: impl Write, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["experiment", "condition", "model", "metric", "mean", "se", "n"])?;
    for r in rows {
        w.write_record([
            r.key.experiment.to_string(),
            r.key.condition.to_string(),
            r.key.model.clone(),
            r.metric.clone(),
            r.estimate.mean.to_string(),
            r.estimate.se.to_string(),
            r.estimate.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `episode, metric, mean, se`
pub fn write_series_csv(writer: impl Write, points: &[SeriesPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["episode", "metric", "mean", "se"])?;
    for p in points {
        w.write_record([
            p.episode.to_string(),
            p.metric.clone(),
            p.estimate.mean.to_string(),
            p.estimate.se.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One table per metric with experiment, condition and model columns.
pub fn render_markdown(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    for (metric, title) in [("kl", "Mean KL ± SE"), ("accuracy", "Accuracy ± SE"), ("entropy_difference", "Entropy difference ± SE")] {
        let selected: Vec<&SummaryRow> = rows.iter().filter(|r| r.metric == metric).collect();
        if selected.is_empty() {
            continue;
        }
        let _ = writeln!(out, "| Experiment | Condition | Model | {title} | n | Missing |");
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for r in selected {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.3} ± {:.3} | {} | {} |",
                r.key.experiment, r.key.condition, r.key.model, r.estimate.mean, r.estimate.se, r.estimate.n, r.missing
            );
        }
        out.push('\n');
    }
    out
}
