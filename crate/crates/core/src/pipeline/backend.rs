use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Live,
    Replay,
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

fn default_timeout_secs() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub mode: BackendMode,
    /// Full chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Line-delimited `{"id", "response"}` records.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
}

impl BackendConfig {
    pub fn replay(fixture: impl Into<PathBuf>) -> Self {
        BackendConfig {
            mode: BackendMode::Replay,
            endpoint: None,
            model: None,
            temperature: 0.0,
            api_key_env: None,
            max_retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            timeout_secs: default_timeout_secs(),
            fixture: Some(fixture.into()),
        }
    }

    pub fn live(endpoint: &str, model: &str, api_key_env: &str) -> Self {
        BackendConfig {
            mode: BackendMode::Live,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            api_key_env: Some(api_key_env.into()),
            fixture: None,
            ..BackendConfig::replay("")
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |m: &str| Err(PipelineError::InvalidBackend(m.to_string()));
        match self.mode {
            BackendMode::Live if self.endpoint.is_none() => invalid("live mode needs an endpoint"),
            BackendMode::Live if self.api_key_env.is_none() => {
                invalid("live mode needs api_key_env")
            }
            BackendMode::Live if self.model.is_none() => invalid("live mode needs a model"),
            BackendMode::Replay if self.fixture.is_none() => {
                invalid("replay mode needs a fixture path")
            }
            _ => Ok(()),
        }
    }
}

/// A connected backend. Cheap to share across worker threads.
#[derive(Debug)]
pub enum Backend {
    Live(LiveBackend),
    Replay(ReplayBackend),
}

impl Backend {
    /// Validates the config; live mode reads the API key here, before any
    /// request is made.
    pub fn connect(config: &BackendConfig) -> Result<Backend, PipelineError> {
        config.validate()?;
        match config.mode {
            BackendMode::Replay => Ok(Backend::Replay(ReplayBackend::load(
                config.fixture.as_deref().unwrap(),
            )?)),
            BackendMode::Live => Ok(Backend::Live(LiveBackend::new(config)?)),
        }
    }

    /// Model output for one item. Replay looks up `item_id`; live mode sends
    /// `messages`.
    pub fn query(&self, item_id: &str, messages: &[ChatMessage]) -> Result<String, PipelineError> {
        match self {
            Backend::Replay(r) => r.get(item_id),
            Backend::Live(l) => l.complete(messages),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

#[derive(Deserialize)]
struct FixtureLine {
    id: Value,
    response: String,
}

impl ReplayBackend {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut responses = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| PipelineError::MalformedRecord { line: i + 1, reason };
            let line: FixtureLine = serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
            let id = match line.id {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                other => return Err(malformed(format!("bad id {other}"))),
            };
            if responses.insert(id.clone(), line.response).is_some() {
                return Err(malformed(format!("duplicate id {id:?}")));
            }
        }
        Ok(ReplayBackend { responses })
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ReplayBackend::parse(&text)
    }

    pub fn get(&self, id: &str) -> Result<String, PipelineError> {
        self.responses
            .get(id)
            .cloned()
            .ok_or_else(|| PipelineError::FixtureMiss(id.to_string()))
    }
}

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: String,
    max_retries: u32,
    backoff: Duration,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

impl LiveBackend {
    fn new(config: &BackendConfig) -> Result<Self, PipelineError> {
        let var = config.api_key_env.clone().unwrap();
        let api_key = std::env::var(&var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(PipelineError::MissingApiKey(var))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| PipelineError::InvalidBackend(e.to_string()))?;
        Ok(LiveBackend {
            client,
            endpoint: config.endpoint.clone().unwrap(),
            model: config.model.clone().unwrap(),
            temperature: config.temperature,
            api_key,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
        })
    }

    fn attempt(&self, messages: &[ChatMessage]) -> Result<String, String> {
        let body = ChatRequest {
            model: &self.model,
            messages,
            temperature: self.temperature,
        };
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| format!("transport: {e}"))?;
        let status = response.status();
        if !status.is_success() {
            return Err(format!("HTTP {}", status.as_u16()));
        }
        let value: Value = response.json().map_err(|e| format!("malformed body: {e}"))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| "malformed body: no choices[0].message.content".to_string())
    }

    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String, PipelineError> {
        let attempts = self.max_retries + 1;
        let mut delay = self.backoff;
        let mut last_error = String::new();
        for n in 0..attempts {
            if n > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(messages) {
                Ok(text) => return Ok(text),
                Err(e) => last_error = e,
            }
        }
        Err(PipelineError::BackendUnavailable {
            attempts,
            last_error,
        })
    }
}
