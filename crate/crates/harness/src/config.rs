use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use gridmind_core::ibl::IblParams;
use gridmind_core::metrics::{TargetRule, DEFAULT_EPSILON};
use gridmind_core::synthetic::{AgentKind, ConditionComplexity};
use gridmind_core::{InfoMode, TaskConfig};
use serde::{Deserialize, Serialize};

pub const URL_ENV: &str = "GRIDMIND_LLM_URL";
pub const MODEL_ENV: &str = "GRIDMIND_LLM_MODEL";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Completion endpoint settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: Option<f64>,
    /// First retry delay; doubles on every further retry.
    pub backoff_ms: u64,
    /// Players queried concurrently.
    pub in_flight: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:11434".into(),
            model_name: "llama3".into(),
            timeout_secs: 120.0,
            max_retries: 3,
            temperature: None,
            backoff_ms: 250,
            in_flight: 4,
        }
    }
}

impl EndpointConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Applies `GRIDMIND_LLM_URL` and `GRIDMIND_LLM_MODEL` when set.
    pub fn with_env(mut self) -> Self {
        if let Ok(url) = std::env::var(URL_ENV) {
            self.base_url = url;
        }
        if let Ok(model) = std::env::var(MODEL_ENV) {
            self.model_name = model;
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        reqwest::Url::parse(&self.base_url)
            .map_err(|e| ConfigError::Invalid(format!("endpoint.base_url {:?}: {e}", self.base_url)))?;
        if self.model_name.is_empty() {
            return Err(ConfigError::Invalid("endpoint.model_name is empty".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ConfigError::Invalid("endpoint.timeout_secs must be positive".into()));
        }
        if self.in_flight == 0 {
            return Err(ConfigError::Invalid("endpoint.in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixEntry {
    pub agent: AgentKind,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub players_per_condition: usize,
    pub info_modes: Vec<InfoMode>,
    pub mix: Vec<MixEntry>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            players_per_condition: 20,
            info_modes: vec![InfoMode::Full],
            mix: vec![
                MixEntry {
                    agent: AgentKind::Satisficing,
                    weight: 0.5,
                },
                MixEntry {
                    agent: AgentKind::EpsilonExplorer { epsilon: 0.2 },
                    weight: 0.5,
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    /// Directory served under `/`.
    pub static_dir: Option<PathBuf>,
    /// Information modes assigned to new sessions in rotation.
    pub info_modes: Vec<InfoMode>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            static_dir: None,
            info_modes: vec![InfoMode::Full, InfoMode::Restricted],
        }
    }
}

/// Run-wide settings. Every random stream is derived from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grids_per_condition: usize,
    pub obstacles: usize,
    pub complexity: ConditionComplexity,
    pub task: TaskConfig,
    pub ibl: IblParams,
    pub endpoint: EndpointConfig,
    pub metrics_epsilon: f64,
    pub target_rule: TargetRule,
    pub population: PopulationConfig,
    pub serve: ServeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            output_dir: PathBuf::from("out"),
            grids_per_condition: 50,
            obstacles: 12,
            complexity: ConditionComplexity::default(),
            task: TaskConfig::default(),
            ibl: IblParams::default(),
            endpoint: EndpointConfig::default(),
            metrics_epsilon: DEFAULT_EPSILON,
            target_rule: TargetRule::Nearest,
            population: PopulationConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        let config: Self = parsed.map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: gridmind_core::Error| ConfigError::Invalid(e.to_string());
        self.task.validate().map_err(invalid)?;
        self.ibl.validate().map_err(invalid)?;
        self.endpoint.validate()?;
        if self.grids_per_condition == 0 {
            return Err(ConfigError::Invalid("grids_per_condition must be at least 1".into()));
        }
        if !(self.metrics_epsilon > 0.0 && self.metrics_epsilon.is_finite()) {
            return Err(ConfigError::Invalid("metrics_epsilon must be positive".into()));
        }
        if self.complexity.simple < 0 || self.complexity.complex < 0 {
            return Err(ConfigError::Invalid("complexity targets must be nonnegative".into()));
        }
        let p = &self.population;
        if p.info_modes.is_empty() || self.serve.info_modes.is_empty() {
            return Err(ConfigError::Invalid("info_modes must not be empty".into()));
        }
        let total: f64 = p.mix.iter().map(|m| m.weight).sum();
        if p.mix.is_empty() || (total - 1.0).abs() > 1e-9 || p.mix.iter().any(|m| m.weight < 0.0) {
            return Err(ConfigError::Invalid(format!(
                "population.mix weights must be nonnegative and sum to 1, got {total}"
            )));
        }
        for m in &p.mix {
            if let AgentKind::EpsilonExplorer { epsilon } = m.agent {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(ConfigError::Invalid(format!("explorer epsilon {epsilon} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}
