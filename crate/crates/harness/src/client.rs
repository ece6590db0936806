//! Blocking client for an Ollama-style `/api/generate` endpoint.

use std::time::{Duration, Instant};

use gridmind_core::llm::{Completer, CompletionFailure};
use serde::{Deserialize, Serialize};

use crate::config::EndpointConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RawCompletion {
    pub text: String,
    pub latency: Duration,
    /// 1-based attempt that succeeded.
    pub attempt: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("completion request failed after {attempts} attempts (last status {status:?}): {message}")]
    Transport {
        attempts: u32,
        status: Option<u16>,
        message: String,
    },
    #[error("completion request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("invalid endpoint url: {0}")]
    Url(String),
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    options: Option<GenerateOptions>,
}

#[derive(Serialize)]
struct GenerateOptions {
    temperature: f64,
}

#[derive(Deserialize)]
struct GenerateResponse {
    response: String,
}

enum Failure {
    Timeout,
    Other { status: Option<u16>, message: String },
}

pub struct HttpCompleter {
    config: EndpointConfig,
    url: reqwest::Url,
    client: reqwest::blocking::Client,
}

impl HttpCompleter {
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        let base = config.base_url.trim_end_matches('/');
        let url = reqwest::Url::parse(&format!("{base}/api/generate")).map_err(|e| ClientError::Url(e.to_string()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ClientError::Url(e.to_string()))?;
        Ok(Self { config, url, client })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn attempt(&self, prompt: &str) -> Result<String, Failure> {
        let body = GenerateRequest {
            model: &self.config.model_name,
            prompt,
            stream: false,
            options: self.config.temperature.map(|temperature| GenerateOptions { temperature }),
        };
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                Failure::Timeout
            } else {
                Failure::Other {
                    status: e.status().map(|s| s.as_u16()),
                    message: e.to_string(),
                }
            }
        };
        let resp = self.client.post(self.url.clone()).json(&body).send().map_err(classify)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Failure::Other {
                status: Some(status.as_u16()),
                message: format!("endpoint returned {status}"),
            });
        }
        let bytes = resp.bytes().map_err(classify)?;
        serde_json::from_slice::<GenerateResponse>(&bytes)
            .map(|r| r.response)
            .map_err(|e| Failure::Other {
                status: Some(status.as_u16()),
                message: format!("undecodable response body: {e}"),
            })
    }

    /// Sends `prompt`, retrying up to `max_retries` times with exponential
    /// backoff on transport failures, error statuses and undecodable bodies.
    pub fn query(&self, prompt: &str) -> Result<RawCompletion, ClientError> {
        let started = Instant::now();
        let attempts = self.config.max_retries + 1;
        let mut last = Failure::Timeout;
        for attempt in 1..=attempts {
            if attempt > 1 {
                let factor = 1u64 << (attempt - 2).min(16);
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms.saturating_mul(factor)));
            }
            match self.attempt(prompt) {
                Ok(text) => {
                    return Ok(RawCompletion {
                        text,
                        latency: started.elapsed(),
                        attempt,
                    })
                }
                Err(f) => last = f,
            }
        }
        Err(match last {
            Failure::Timeout => ClientError::Timeout { attempts },
            Failure::Other { status, message } => ClientError::Transport {
                attempts,
                status,
                message,
            },
        })
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, prompt: &str) -> Result<String, CompletionFailure> {
        self.query(prompt).map(|c| c.text).map_err(|e| Box::new(e) as CompletionFailure)
    }
}
