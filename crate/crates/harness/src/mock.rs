//! Scripted stand-in for the completion endpoint.
//!
//! A script is a list of rules, each a regular expression over the prompt
//! and a sequence of replies. The first matching rule answers; its replies
//! are used in order and the last one repeats. Prompts no rule matches get
//! the fallback reply.
//!
//! ```json
//! {
//!   "rules": [
//!     {"pattern": "episode 2\\?", "replies": [
//!       {"kind": "status", "code": 503},
//!       {"kind": "text", "text": "Sure: [(1, 2), (1, 3)]"}
//!     ]}
//!   ],
//!   "fallback": {"kind": "echo_last"}
//! }
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{Context, Result};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MockReply {
    /// A well-formed completion.
    Text { text: String },
    /// An error status with an optional plain body.
    Status {
        code: u16,
        #[serde(default)]
        body: String,
    },
    /// A success status whose JSON body is cut off mid-way.
    Truncated { text: String },
    /// The coordinate list of the prompt's last demonstration.
    EchoLast,
    /// Waits before answering.
    Delay { ms: u64, then: Box<MockReply> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    pub pattern: String,
    pub replies: Vec<MockReply>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default = "default_fallback")]
    pub fallback: MockReply,
}

fn default_fallback() -> MockReply {
    MockReply::EchoLast
}

impl Default for MockScript {
    fn default() -> Self {
        Self {
            rules: Vec::new(),
            fallback: default_fallback(),
        }
    }
}

impl MockScript {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing mock script {}", path.display()))
    }
}

struct CompiledRule {
    pattern: Regex,
    replies: Vec<MockReply>,
    used: AtomicUsize,
}

/// Shared state of a running mock; counters are readable from tests.
pub struct MockState {
    rules: Vec<CompiledRule>,
    fallback: MockReply,
    pub calls: AtomicUsize,
    /// Request bodies in arrival order.
    pub requests: Mutex<Vec<serde_json::Value>>,
}

impl MockState {
    pub fn new(script: MockScript) -> Result<Arc<Self>> {
        let rules = script
            .rules
            .into_iter()
            .map(|r| {
                anyhow::ensure!(!r.replies.is_empty(), "rule {:?} has no replies", r.pattern);
                Ok(CompiledRule {
                    pattern: Regex::new(&r.pattern).with_context(|| format!("bad pattern {:?}", r.pattern))?,
                    replies: r.replies,
                    used: AtomicUsize::new(0),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Arc::new(Self {
            rules,
            fallback: script.fallback,
            calls: AtomicUsize::new(0),
            requests: Mutex::new(Vec::new()),
        }))
    }

    pub fn prompts(&self) -> Vec<String> {
        self.requests
            .lock()
            .expect("request log")
            .iter()
            .map(|r| r["prompt"].as_str().unwrap_or_default().to_string())
            .collect()
    }

    fn pick(&self, prompt: &str) -> MockReply {
        for rule in &self.rules {
            if rule.pattern.is_match(prompt) {
                let i = rule.used.fetch_add(1, Ordering::SeqCst);
                return rule.replies[i.min(rule.replies.len() - 1)].clone();
            }
        }
        self.fallback.clone()
    }
}

/// The last `[...]` coordinate list following a demonstration header.
pub fn last_demonstration(prompt: &str) -> Option<&str> {
    let line = prompt.lines().rev().find(|l| l.starts_with("The trajectory of episode"))?;
    let start = line.find('[')?;
    let end = line[start..].find(']')? + start;
    Some(&line[start..=end])
}

fn completion(model: &str, text: &str) -> String {
    serde_json::json!({ "model": model, "response": text, "done": true }).to_string()
}

async fn render(reply: MockReply, model: &str, prompt: &str) -> Response {
    let mut reply = reply;
    while let MockReply::Delay { ms, then } = reply {
        tokio::time::sleep(Duration::from_millis(ms)).await;
        reply = *then;
    }
    let json = |body: String| ([(header::CONTENT_TYPE, "application/json")], body).into_response();
    match reply {
        MockReply::Text { text } => json(completion(model, &text)),
        MockReply::EchoLast => json(completion(model, last_demonstration(prompt).unwrap_or("I cannot answer."))),
        MockReply::Truncated { text } => {
            let full = completion(model, &text);
            json(full[..full.len() / 2].to_string())
        }
        MockReply::Status { code, body } => {
            (StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), body).into_response()
        }
        MockReply::Delay { .. } => unreachable!("delays unwrapped above"),
    }
}

async fn generate(State(state): State<Arc<MockState>>, Json(req): Json<serde_json::Value>) -> Response {
    state.calls.fetch_add(1, Ordering::SeqCst);
    let model = req["model"].as_str().unwrap_or_default().to_string();
    let prompt = req["prompt"].as_str().unwrap_or_default().to_string();
    state.requests.lock().expect("request log").push(req);
    let reply = state.pick(&prompt);
    render(reply, &model, &prompt).await
}

pub fn router(state: Arc<MockState>) -> Router {
    Router::new().route("/api/generate", post(generate)).with_state(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_parses_and_sequences() {
        let script: MockScript = serde_json::from_str(
            r#"{"rules":[{"pattern":"a","replies":[{"kind":"status","code":500},{"kind":"text","text":"x"}]}]}"#,
        )
        .unwrap();
        assert_eq!(script.fallback, MockReply::EchoLast);
        let state = MockState::new(script).unwrap();
        assert!(matches!(state.pick("a"), MockReply::Status { code: 500, .. }));
        assert!(matches!(state.pick("a"), MockReply::Text { .. }));
        assert!(matches!(state.pick("a"), MockReply::Text { .. }));
        assert_eq!(state.pick("b"), MockReply::EchoLast);
    }

    #[test]
    fn finds_last_demonstration() {
        let prompt = "intro\nThe trajectory of episode 1: [(1, 2)]. x\nThe trajectory of episode 2: [(3, 4), (3, 5)]. y\nWhat?";
        assert_eq!(last_demonstration(prompt), Some("[(3, 4), (3, 5)]"));
        assert_eq!(last_demonstration("none"), None);
    }

    #[test]
    fn bad_pattern_is_an_error() {
        let script = MockScript {
            rules: vec![MockRule {
                pattern: "(".into(),
                replies: vec![MockReply::EchoLast],
            }],
            ..MockScript::default()
        };
        assert!(MockState::new(script).is_err());
    }
}
