//! Completion-model client.
//!
//! Requests go out as `{prompt, n, temperature, top_p, max_tokens, stop}`
//! and come back as `{choices: [{text, finish_reason}]}`. Every sample is
//! cut at the earliest stop marker before it is returned.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_STOP_MARKERS: [&str; 5] = ["\nclass", "\ndef", "\nprint", "\n#", "\nif"];
pub const DEFAULT_IN_FLIGHT: usize = 4;
const ATTEMPTS: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no canned completions for prompt sha256 {0}")]
    MockMissing(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("model endpoint is not configured (set MODEL_URL or pass --model-url)")]
    NotConfigured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub n_samples: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: usize,
    pub stop_markers: Vec<String>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            n_samples: 100,
            temperature: 0.8,
            top_p: 0.95,
            max_new_tokens: 300,
            stop_markers: DEFAULT_STOP_MARKERS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: &str| Err(GenerationError::InvalidRequest(m.into()));
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1");
        }
        if !(self.temperature >= 0.0) {
            return bad("temperature must be >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub raw: String,
    pub finish_reason: FinishReason,
}

/// `raw` up to the earliest stop marker. Equal positions go to the marker
/// listed first.
pub fn truncate_at_stop<'a>(raw: &'a str, stop_markers: &[String]) -> &'a str {
    let cut = stop_markers
        .iter()
        .filter(|m| !m.is_empty())
        .filter_map(|m| raw.find(m.as_str()))
        .min();
    match cut {
        Some(i) => &raw[..i],
        None => raw,
    }
}

/// One sample as the endpoint returned it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawChoice {
    pub text: String,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

pub trait CompletionModel: Send + Sync {
    fn complete(&self, request: &GenerationRequest) -> Result<Vec<RawChoice>, GenerationError>;
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    n: usize,
    temperature: f64,
    top_p: f64,
    max_tokens: usize,
    stop: &'a [String],
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<RawChoice>,
}

/// JSON-over-HTTP endpoint. Transport failures (connection errors, timeouts,
/// 429 and 5xx) are retried with exponential backoff; anything else is not.
pub struct HttpModel {
    url: String,
    key: Option<String>,
    agent: ureq::Agent,
    backoff: Duration,
}

enum Attempt {
    Retry(String),
    Fatal(GenerationError),
}

impl HttpModel {
    pub fn new(url: impl Into<String>, key: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(300)))
            .build();
        HttpModel {
            url: url.into(),
            key,
            agent: ureq::Agent::new_with_config(config),
            backoff: Duration::from_millis(250),
        }
    }

    /// Reads `MODEL_URL` and `MODEL_KEY`.
    pub fn from_env() -> Result<Self, GenerationError> {
        let url = std::env::var("MODEL_URL").map_err(|_| GenerationError::NotConfigured)?;
        Ok(Self::new(url, std::env::var("MODEL_KEY").ok()))
    }

    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<Vec<RawChoice>, Attempt> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(Attempt::Fatal(GenerationError::Protocol(format!("HTTP {status}: {text}"))));
        }
        let parsed: WireResponse = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(GenerationError::Protocol(format!("bad response body: {e}"))))?;
        Ok(parsed.choices)
    }
}

impl CompletionModel for HttpModel {
    fn complete(&self, request: &GenerationRequest) -> Result<Vec<RawChoice>, GenerationError> {
        let body = WireRequest {
            prompt: &request.prompt,
            n: request.n_samples,
            temperature: request.temperature,
            top_p: request.top_p,
            max_tokens: request.max_new_tokens,
            stop: &request.stop_markers,
        };
        let mut last = String::new();
        for attempt in 0..ATTEMPTS {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(choices) => return Ok(choices),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(m)) => last = m,
            }
        }
        Err(GenerationError::Transport {
            attempts: ATTEMPTS,
            message: last,
        })
    }
}

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    pub prompt_sha256: String,
    pub completions: Vec<String>,
}

/// Canned completions keyed by the SHA-256 of the prompt.
#[derive(Debug, Clone, Default)]
pub struct MockModel {
    canned: HashMap<String, Vec<String>>,
}

impl MockModel {
    pub fn from_entries(entries: impl IntoIterator<Item = MockEntry>) -> Self {
        MockModel {
            canned: entries
                .into_iter()
                .map(|e| (e.prompt_sha256, e.completions))
                .collect(),
        }
    }

    pub fn insert(&mut self, prompt: &str, completions: Vec<String>) {
        self.canned.insert(prompt_sha256(prompt), completions);
    }

    /// JSON lines of [`MockEntry`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenerationError> {
        let path = path.as_ref();
        let io = |message: String| GenerationError::Io {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(line).map_err(|e| io(format!("line {}: {e}", i + 1)))?);
        }
        Ok(Self::from_entries(entries))
    }
}

impl CompletionModel for MockModel {
    fn complete(&self, request: &GenerationRequest) -> Result<Vec<RawChoice>, GenerationError> {
        let key = prompt_sha256(&request.prompt);
        let canned = self.canned.get(&key).ok_or(GenerationError::MockMissing(key))?;
        if canned.len() < request.n_samples {
            return Err(GenerationError::Protocol(format!(
                "mock has {} completions, {} requested",
                canned.len(),
                request.n_samples
            )));
        }
        Ok(canned[..request.n_samples]
            .iter()
            .map(|t| RawChoice {
                text: t.clone(),
                finish_reason: Some("stop".into()),
            })
            .collect())
    }
}

fn finish(choice: RawChoice, stop_markers: &[String]) -> Completion {
    let text = truncate_at_stop(&choice.text, stop_markers).to_string();
    let finish_reason = match choice.finish_reason.as_deref() {
        Some("error") => FinishReason::Error,
        _ if text.len() < choice.text.len() => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        _ => FinishReason::Stop,
    };
    Completion {
        text,
        raw: choice.text,
        finish_reason,
    }
}

/// Samples `request.n_samples` completions, in the order the model returned
/// them.
pub fn generate(model: &dyn CompletionModel, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError> {
    request.validate()?;
    let choices = model.complete(request)?;
    if choices.len() != request.n_samples {
        return Err(GenerationError::Protocol(format!(
            "expected {} choices, got {}",
            request.n_samples,
            choices.len()
        )));
    }
    Ok(choices
        .into_iter()
        .map(|c| finish(c, &request.stop_markers))
        .collect())
}

/// Runs many requests with at most `in_flight` outstanding; results come
/// back in request order.
pub fn generate_batch(
    model: &dyn CompletionModel,
    requests: &[GenerationRequest],
    in_flight: usize,
) -> Vec<Result<Vec<Completion>, GenerationError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Vec<Completion>, GenerationError>>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..in_flight.max(1).min(requests.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= requests.len() {
                    break;
                }
                let r = generate(model, &requests[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every request is processed"))
        .collect()
}
