use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gridmind(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridmind"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("GRIDMIND_LLM_URL")
        .env_remove("GRIDMIND_LLM_MODEL")
        .output()
        .expect("spawn gridmind")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = gridmind(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn count_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn offline_pipeline_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["--seed", "7", "generate-grids", "--n", "100"]);
    let mut by_complexity = BTreeMap::<i64, usize>::new();
    let files: Vec<_> = std::fs::read_dir(out.join("grids")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 100);
    for f in &files {
        let g: Value = serde_json::from_str(&std::fs::read_to_string(f).unwrap()).unwrap();
        *by_complexity.entry(g["complexity"].as_i64().unwrap()).or_default() += 1;
    }
    assert_eq!(by_complexity, BTreeMap::from([(1, 50), (4, 50)]));

    ok(out, &["--seed", "7", "simulate", "--players", "5"]);
    assert_eq!(count_lines(&out.join("players.jsonl")), 10);
    assert_eq!(count_lines(&out.join("trajectories.jsonl")), 400);

    ok(out, &["--seed", "7", "predict", "--model", "ibl"]);
    assert_eq!(count_lines(&out.join("predictions/ibl.jsonl")), 10 * 39);

    // Scoring the observed log against itself is a perfect prediction.
    let table = ok(
        out,
        &["evaluate", "--model", "copy", "--predictions", out.join("trajectories.jsonl").to_str().unwrap()],
    );
    let reports: Vec<Value> = std::fs::read_to_string(out.join("reports/copy.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(reports.len(), 10);
    for r in &reports {
        assert_eq!(r["mean_kl"]["mean"].as_f64(), Some(0.0));
        assert_eq!(r["accuracy"]["mean"].as_f64(), Some(1.0));
    }
    assert!(table.contains("| full | simple | copy | 0.000 ± 0.000 | 5 | 0 |"), "{table}");

    ok(out, &["evaluate", "--model", "ibl"]);
    ok(out, &["report"]);
    let summary = std::fs::read_to_string(out.join("report/summary.csv")).unwrap();
    assert!(summary.starts_with("experiment,condition,model,metric,mean,se,n\n"));
    assert!(summary.contains("full,complex,ibl,kl,"));
    assert!(out.join("report/report.md").exists());
    assert!(out.join("report/series-full-simple-ibl.csv").exists());
}

#[test]
fn exit_codes_separate_usage_from_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(gridmind(out, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(gridmind(out, &["generate-grids", "--n", "3"]).status.code(), Some(2));
    assert_eq!(gridmind(out, &["predict", "--model", "ibl"]).status.code(), Some(1));

    let bad = out.join("bad.toml");
    std::fs::write(&bad, "seed = 1\nunknown_key = 2\n").unwrap();
    let o = gridmind(out, &["--config", bad.to_str().unwrap(), "report"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("exp.toml");
    std::fs::write(&cfg, "seed = 3\ngrids_per_condition = 2\n[population]\nplayers_per_condition = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(out, &["--config", c, "generate-grids"]);
    ok(out, &["--config", c, "simulate"]);
    assert_eq!(std::fs::read_dir(out.join("grids")).unwrap().count(), 4);
    assert_eq!(count_lines(&out.join("players.jsonl")), 4);
}

/// Mirrors the transition rules from the published fixture alone, the way a
/// client implementation would.
fn client_step(grid: &Value, task: &Value, pos: (i64, i64), action: &str) -> Value {
    let pair = |v: &Value| (v[0].as_i64().unwrap(), v[1].as_i64().unwrap());
    let obstacles: BTreeSet<_> = grid["obstacles"].as_array().unwrap().iter().map(pair).collect();
    let (dx, dy) = match action {
        "up" => (0, 1),
        "down" => (0, -1),
        "left" => (-1, 0),
        "right" => (1, 0),
        a => panic!("unknown action {a}"),
    };
    let next = (pos.0 + dx, pos.1 + dy);
    let (w, h) = (grid["width"].as_i64().unwrap(), grid["height"].as_i64().unwrap());
    let out_of_bounds = next.0 < 0 || next.1 < 0 || next.0 >= w || next.1 >= h;
    let target = grid["targets"]
        .as_object()
        .unwrap()
        .iter()
        .find(|(_, p)| pair(p) == next)
        .map(|(c, _)| c.clone());
    let (position, reward, terminal, event) = if out_of_bounds {
        (pos, task["obstacle_penalty"].clone(), false, serde_json::json!({"kind": "blocked_boundary"}))
    } else if obstacles.contains(&next) {
        (pos, task["obstacle_penalty"].clone(), false, serde_json::json!({"kind": "blocked_obstacle"}))
    } else if let Some(c) = target {
        (next, grid["rewards"][&c].clone(), true, serde_json::json!({"kind": "consumed", "color": c}))
    } else {
        (next, task["step_cost"].clone(), false, serde_json::json!({"kind": "moved"}))
    };
    serde_json::json!({"position": [position.0, position.1], "reward": reward, "terminal": terminal, "event": event})
}

#[test]
fn conformance_fixture_replays_without_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["--seed", "11", "generate-grids", "--n", "4"]);
    let path = out.join("conformance.json");
    ok(out, &["conformance-fixture", "--output", path.to_str().unwrap(), "--grids", "2"]);
    let fixture: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let grids: BTreeMap<&str, &Value> = fixture["grids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| (g["id"].as_str().unwrap(), g))
        .collect();
    assert_eq!(grids.len(), 2);
    let cases = fixture["cases"].as_array().unwrap();
    assert!(cases.len() >= 500, "only {} cases", cases.len());
    let mut mismatches = 0;
    for case in cases {
        let grid = grids[case["grid_id"].as_str().unwrap()];
        let pos = (case["position"][0].as_i64().unwrap(), case["position"][1].as_i64().unwrap());
        if client_step(grid, &fixture["task"], pos, case["action"].as_str().unwrap()) != case["outcome"] {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
    let blocked = cases.iter().filter(|c| c["outcome"]["event"]["kind"] == "blocked_obstacle").count();
    let consumed = cases.iter().filter(|c| c["outcome"]["terminal"] == true).count();
    assert!(blocked > 0 && consumed > 0);
}
