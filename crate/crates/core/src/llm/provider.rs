use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;
use thiserror::Error;

use super::{ModelParams, TemplateId};

pub const BASE_URL_VAR: &str = "CRUX_LLM_BASE_URL";
pub const API_KEY_VAR: &str = "CRUX_LLM_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("rate limited by provider")]
    RateLimited,
    #[error("no API credential configured (set {API_KEY_VAR})")]
    AuthMissing,
    #[error("provider returned HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("no recorded exchange for digest {digest} ({template_id})")]
    MissingFixture { digest: String, template_id: String },
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Unavailable(_) | ProviderError::RateLimited)
    }
}

/// One rendered request as seen by a provider.
#[derive(Debug, Clone, Copy)]
pub struct ProviderCall<'a> {
    pub template_id: TemplateId,
    pub prompt: &'a str,
    pub params: &'a ModelParams,
    pub digest: &'a str,
}

pub trait Provider: Send + Sync {
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError>;
}

/// OpenAI-compatible `chat/completions` client.
pub struct HttpProvider {
    base_url: String,
    api_key: Option<String>,
    timeout: Duration,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        HttpProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.filter(|k| !k.trim().is_empty()),
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads `CRUX_LLM_BASE_URL` and `CRUX_LLM_API_KEY`. A missing key is only
    /// reported when a call is attempted.
    pub fn from_env() -> Self {
        let base_url = std::env::var(BASE_URL_VAR).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        HttpProvider::new(base_url, std::env::var(API_KEY_VAR).ok())
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Provider for HttpProvider {
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError> {
        let key = self.api_key.as_deref().ok_or(ProviderError::AuthMissing)?;
        let body = ChatRequest {
            model: &call.params.model_id,
            messages: [ChatMessage { role: "user", content: call.prompt }],
            temperature: call.params.temperature,
            max_tokens: call.params.max_tokens,
        };
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(self.timeout)).http_status_as_error(false).build().into();
        let mut response = agent
            .post(&format!("{}/chat/completions", self.base_url))
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::AuthMissing),
            429 => return Err(ProviderError::RateLimited),
            500..=599 => return Err(ProviderError::Unavailable(format!("HTTP {status}"))),
            _ => {
                let message = response.body_mut().read_to_string().unwrap_or_default();
                return Err(ProviderError::Http { status, message });
            }
        }
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Unavailable(format!("unreadable response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Unavailable("response has no choices".into()))
    }
}

/// One line of a fixture file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureLine {
    pub digest: String,
    pub template_id: String,
    pub response_text: String,
}

pub fn read_fixture_lines<R: Read>(reader: R) -> io::Result<Vec<FixtureLine>> {
    let mut lines = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(lines)
}

pub fn write_fixture_lines<W: Write>(mut writer: W, lines: &[FixtureLine]) -> io::Result<()> {
    for line in lines {
        serde_json::to_writer(&mut writer, line)?;
        writeln!(writer)?;
    }
    writer.flush()
}

/// Replays recorded exchanges keyed by request digest. Never touches the
/// network; an unknown digest is a [`ProviderError::MissingFixture`].
#[derive(Default)]
pub struct FixtureProvider {
    responses: HashMap<String, String>,
    calls: AtomicUsize,
}

impl FixtureProvider {
    pub fn new(lines: impl IntoIterator<Item = FixtureLine>) -> Self {
        let mut responses = HashMap::new();
        for line in lines {
            // First recording of a digest wins.
            responses.entry(line.digest).or_insert(line.response_text);
        }
        FixtureProvider { responses, calls: AtomicUsize::new(0) }
    }

    pub fn from_path(path: &Path) -> io::Result<Self> {
        Ok(FixtureProvider::new(read_fixture_lines(File::open(path)?)?))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Provider for FixtureProvider {
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.responses.get(call.digest).cloned().ok_or_else(|| ProviderError::MissingFixture {
            digest: call.digest.to_string(),
            template_id: call.template_id.as_str().to_string(),
        })
    }
}

/// Wraps another provider and keeps every successful exchange so it can be
/// written out as a fixture file.
pub struct RecordingProvider<P> {
    inner: P,
    recorded: Mutex<Vec<FixtureLine>>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider { inner, recorded: Mutex::new(Vec::new()) }
    }

    pub fn recorded(&self) -> Vec<FixtureLine> {
        self.recorded.lock().expect("recorder lock").clone()
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError> {
        let response = self.inner.complete(call)?;
        self.recorded.lock().expect("recorder lock").push(FixtureLine {
            digest: call.digest.to_string(),
            template_id: call.template_id.as_str().to_string(),
            response_text: response.clone(),
        });
        Ok(response)
    }
}

/// Provider backed by a closure; handy for scripted tests and fakes.
pub struct FnProvider<F>(pub F);

impl<F> Provider for FnProvider<F>
where
    F: Fn(&ProviderCall<'_>) -> Result<String, ProviderError> + Send + Sync,
{
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError> {
        (self.0)(call)
    }
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError> {
        (**self).complete(call)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, call: &ProviderCall<'_>) -> Result<String, ProviderError> {
        (**self).complete(call)
    }
}
