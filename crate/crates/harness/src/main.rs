use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use gridmind::client::HttpCompleter;
use gridmind::config::ExperimentConfig;
use gridmind::fixture::conformance_fixture;
use gridmind::mock::{self, MockScript, MockState};
use gridmind::pipeline::{self, IBL_MODEL};
use gridmind::serve::{self, ServeState};
use gridmind::server::run_foreground;
use gridmind::store::Store;

#[derive(Parser)]
#[command(name = "gridmind", version, about = "Gridworld human-behavior prediction experiments")]
struct Cli {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ibl,
    Llm,
}

#[derive(Subcommand)]
enum Command {
    /// Generate grids, half per condition.
    GenerateGrids {
        /// Total number of grids (even).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        obstacles: Option<usize>,
    },
    /// Simulate a synthetic player population on the stored grids.
    Simulate {
        /// Players per condition and information mode.
        #[arg(long)]
        players: Option<usize>,
    },
    /// Predict episodes 2..n of every stored player.
    Predict {
        #[arg(long, value_enum)]
        model: Model,
        /// Completion model name (llm only).
        #[arg(long)]
        llm_model: Option<String>,
        /// Completion endpoint base URL (llm only).
        #[arg(long)]
        url: Option<String>,
    },
    /// Score a prediction log against the stored players.
    Evaluate {
        /// `ibl`, `llm`, or any label for `--predictions`.
        #[arg(long)]
        model: String,
        /// Prediction log to score instead of the stored one.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Aggregate all stored reports into CSV and markdown.
    Report,
    /// Serve the experiment UI and episode ingestion endpoints.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Run a scripted completion endpoint.
    MockLlm {
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:11435")]
        bind: SocketAddr,
    },
    /// Write the step-semantics fixture for client implementations.
    ConformanceFixture {
        #[arg(long, default_value = "conformance.json")]
        output: PathBuf,
        /// Number of stored grids to cover.
        #[arg(long, default_value_t = 2)]
        grids: usize,
    },
}

enum Failure {
    Usage(String),
    Config(String),
    Run(anyhow::Error),
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    cfg.endpoint = cfg.endpoint.with_env();
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli)?;
    let store = Store::new(cfg.output_dir.clone());
    match cli.command {
        Command::GenerateGrids { n, obstacles } => {
            if let Some(n) = n {
                if n == 0 || n % 2 != 0 {
                    return Err(Failure::Usage(format!("--n must be a positive even number, got {n}")));
                }
                cfg.grids_per_condition = n / 2;
            }
            if let Some(k) = obstacles {
                cfg.obstacles = k;
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let grids = pipeline::generate_grids(&cfg).map_err(Failure::Run)?;
            store.save_grids(&grids).map_err(Failure::Run)?;
            eprintln!("wrote {} grids to {}", grids.len(), store.grids_dir().display());
        }
        Command::Simulate { players } => {
            if let Some(n) = players {
                cfg.population.players_per_condition = n;
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let run = || -> Result<usize> {
                let grids = store.load_grids()?;
                let players = pipeline::simulate(&cfg, &grids)?;
                store.save_population(&players)?;
                Ok(players.len())
            };
            let n = run().map_err(Failure::Run)?;
            eprintln!("simulated {n} players into {}", store.trajectories_path().display());
        }
        Command::Predict { model, llm_model, url } => {
            if let Some(m) = llm_model {
                cfg.endpoint.model_name = m;
            }
            if let Some(u) = url {
                cfg.endpoint.base_url = u;
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            predict(&cfg, &store, model).map_err(Failure::Run)?;
        }
        Command::Evaluate { model, predictions } => {
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let label = match model.as_str() {
                "llm" => pipeline::llm_model_label(&cfg.endpoint.model_name),
                other => other.to_string(),
            };
            evaluate(&cfg, &store, &label, predictions).map_err(Failure::Run)?;
        }
        Command::Report => {
            let run = || -> Result<()> {
                let reports = store.load_all_reports()?;
                for w in pipeline::write_report(&store, &reports)? {
                    eprintln!("warning: {w}");
                }
                eprintln!("wrote {}", store.report_dir().display());
                Ok(())
            };
            run().map_err(Failure::Run)?;
        }
        Command::Serve { bind, static_dir } => {
            if let Some(b) = bind {
                cfg.serve.bind = b;
            }
            if let Some(d) = static_dir {
                cfg.serve.static_dir = Some(d);
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let run = || -> Result<()> {
                let grids = store.load_grids().context("serve needs grids; run generate-grids first")?;
                let state = ServeState::new(
                    Store::new(cfg.output_dir.clone()),
                    grids,
                    &cfg.complexity,
                    cfg.task.clone(),
                    seed_for_serve(&cfg),
                    cfg.serve.info_modes.clone(),
                )?;
                let app = serve::router(Arc::new(state), cfg.serve.static_dir.as_deref());
                run_foreground(cfg.serve.bind, app)
            };
            run().map_err(Failure::Run)?;
        }
        Command::MockLlm { script, bind } => {
            let run = || -> Result<()> {
                let script = match script {
                    Some(p) => MockScript::load(&p)?,
                    None => MockScript::default(),
                };
                run_foreground(bind, mock::router(MockState::new(script)?))
            };
            run().map_err(Failure::Run)?;
        }
        Command::ConformanceFixture { output, grids } => {
            let run = || -> Result<()> {
                let mut all = store.load_grids()?;
                all.truncate(grids);
                let fixture = conformance_fixture(&all, &cfg.task)?;
                std::fs::write(&output, serde_json::to_string_pretty(&fixture)? + "\n")?;
                eprintln!("wrote {} cases to {}", fixture.cases.len(), output.display());
                Ok(())
            };
            run().map_err(Failure::Run)?;
        }
    }
    Ok(())
}

fn seed_for_serve(cfg: &ExperimentConfig) -> u64 {
    gridmind_core::seed::derive(cfg.seed, "serve", 0)
}

fn predict(cfg: &ExperimentConfig, store: &Store, model: Model) -> Result<()> {
    let grids = store.load_grids()?;
    let players = store.load_population(&grids, &cfg.task)?;
    match model {
        Model::Ibl => {
            let lines = pipeline::predict_ibl(cfg, &players, &grids)?;
            store.save_predictions(IBL_MODEL, &lines)?;
            eprintln!("wrote {} predictions to {}", lines.len(), store.predictions_path(IBL_MODEL).display());
        }
        Model::Llm => {
            let label = pipeline::llm_model_label(&cfg.endpoint.model_name);
            let completer = HttpCompleter::new(cfg.endpoint.clone())?;
            let (lines, summary) = pipeline::predict_llm(cfg, &players, &grids, &completer)?;
            store.save_predictions(&label, &lines)?;
            std::fs::write(
                store.prediction_summary_path(&label),
                serde_json::to_string_pretty(&summary)? + "\n",
            )?;
            eprintln!(
                "wrote {} predictions ({} missing, {} re-queries, {} repairs) to {}",
                summary.predicted,
                summary.missing,
                summary.requeries,
                summary.repairs.total(),
                store.predictions_path(&label).display()
            );
        }
    }
    Ok(())
}

fn evaluate(cfg: &ExperimentConfig, store: &Store, label: &str, predictions: Option<PathBuf>) -> Result<()> {
    let grids = store.load_grids()?;
    let players = store.load_population(&grids, &cfg.task)?;
    let lines = match predictions {
        Some(p) => gridmind::store::read_lines(&p)?,
        None => store.load_prediction_lines(label)?,
    };
    let (reports, skipped) = pipeline::evaluate(cfg, &players, &grids, &lines, label)?;
    if skipped > 0 {
        eprintln!("skipped {skipped} predictions for the first episode");
    }
    store.save_reports(label, &reports)?;
    let (rows, _) = gridmind_core::metrics::aggregate(&reports);
    print!("{}", gridmind_core::metrics::render_markdown(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => Cli::command().error(clap::error::ErrorKind::ValueValidation, msg).exit(),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
