//! Every language-model call goes through [`Gateway`]: prompt rendering,
//! response caching (in memory and optionally on disk), retries with
//! exponential backoff and a cap on concurrent provider calls.
//!
//! Providers are pluggable. [`HttpProvider`] talks to an OpenAI-compatible
//! endpoint; [`FixtureProvider`] replays recorded exchanges so a whole
//! pipeline run is a pure function of its inputs and fixture file.

mod provider;
mod template;

pub use provider::{
    read_fixture_lines, write_fixture_lines, FixtureLine, FixtureProvider, FnProvider, HttpProvider, Provider,
    ProviderCall, ProviderError, RecordingProvider, API_KEY_VAR, BASE_URL_VAR, DEFAULT_BASE_URL,
};
pub use template::{render, PromptTemplate, TemplateId};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_GENERATION_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template_id} needs slot {{{slot}}}")]
    UnboundSlot { template_id: String, slot: String },
    #[error("provider unavailable after {attempts} attempt(s): {message}")]
    ProviderUnavailable { attempts: u32, message: String },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("no API credential configured (set {API_KEY_VAR})")]
    AuthMissing,
}

impl From<ProviderError> for GatewayError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::AuthMissing => GatewayError::AuthMissing,
            ProviderError::RateLimited => GatewayError::RateLimited { attempts: 1 },
            other => GatewayError::ProviderUnavailable { attempts: 1, message: other.to_string() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Which model and decoding settings each template uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    /// Model for `pathb_gen`; a fine-tuned generator can be named here.
    pub generator_model_id: Option<String>,
    /// Model for `pathb_judge`; a fine-tuned classifier can be named here.
    pub judge_model_id: Option<String>,
    pub generation_temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model_id: DEFAULT_MODEL.to_string(),
            generator_model_id: None,
            judge_model_id: None,
            generation_temperature: DEFAULT_GENERATION_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl ModelConfig {
    /// Temperature 0 for extraction, checking and judging; the generation
    /// temperature for clue-writing templates.
    pub fn params_for(&self, template_id: TemplateId) -> ModelParams {
        let model_id = match template_id {
            TemplateId::PathbGen => self.generator_model_id.as_ref(),
            TemplateId::PathbJudge => self.judge_model_id.as_ref(),
            _ => None,
        }
        .unwrap_or(&self.model_id)
        .clone();
        ModelParams {
            model_id,
            temperature: if template_id.is_generative() { self.generation_temperature } else { 0.0 },
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub template_id: TemplateId,
    pub bound_inputs: BTreeMap<String, String>,
    pub params: ModelParams,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    template_id: &'a str,
    bound_inputs: &'a BTreeMap<String, String>,
    params: &'a ModelParams,
}

impl LlmRequest {
    pub fn new<K, V>(template_id: TemplateId, inputs: impl IntoIterator<Item = (K, V)>, params: ModelParams) -> Self
    where
        K: Into<String>,
        V: Into<String>,
    {
        LlmRequest {
            template_id,
            bound_inputs: inputs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
            params,
        }
    }

    /// Hex SHA-256 of the canonical JSON of (template id, inputs, params).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(&DigestInput {
            template_id: self.template_id.as_str(),
            bound_inputs: &self.bound_inputs,
            params: &self.params,
        })
        .expect("digest input serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn render(&self) -> Result<String, GatewayError> {
        self.template_id.template().render(&self.bound_inputs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub template_id: TemplateId,
    pub bound_inputs: BTreeMap<String, String>,
    pub params: ModelParams,
    pub digest: String,
    pub response_text: String,
    pub cached: bool,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
}

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 4, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(8) }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based): base * 2^(retry-1), capped.
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Counting semaphore bounding in-flight provider calls.
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { available: Mutex::new(permits.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().expect("semaphore lock");
        while *available == 0 {
            available = self.freed.wait(available).expect("semaphore lock");
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("semaphore lock") += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    template_id: TemplateId,
    bound_inputs: BTreeMap<String, String>,
    params: ModelParams,
    response_text: String,
}

pub struct Gateway {
    provider: Arc<dyn Provider>,
    models: ModelConfig,
    retry: RetryPolicy,
    cache: Mutex<HashMap<String, String>>,
    cache_dir: Option<PathBuf>,
    in_flight: Semaphore,
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        Gateway {
            provider,
            models: ModelConfig::default(),
            retry: RetryPolicy::default(),
            cache: Mutex::new(HashMap::new()),
            cache_dir: None,
            in_flight: Semaphore::new(4),
        }
    }

    pub fn with_models(mut self, models: ModelConfig) -> Self {
        self.models = models;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.in_flight = Semaphore::new(limit);
        self
    }

    /// Persist responses as `<dir>/<digest>.json` and consult them before
    /// calling the provider.
    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn models(&self) -> &ModelConfig {
        &self.models
    }

    /// Builds a request for `template_id` with the configured model parameters.
    pub fn request<K, V>(&self, template_id: TemplateId, inputs: impl IntoIterator<Item = (K, V)>) -> LlmRequest
    where
        K: Into<String>,
        V: Into<String>,
    {
        LlmRequest::new(template_id, inputs, self.models.params_for(template_id))
    }

    pub fn complete(&self, request: &LlmRequest) -> Result<LlmExchange, GatewayError> {
        let started = Instant::now();
        let prompt = request.render()?;
        let digest = request.digest();
        let exchange = |response_text: String, cached: bool| LlmExchange {
            template_id: request.template_id,
            bound_inputs: request.bound_inputs.clone(),
            params: request.params.clone(),
            digest: digest.clone(),
            response_text,
            cached,
            latency: started.elapsed(),
        };

        if let Some(hit) = self.lookup(&digest) {
            return Ok(exchange(hit, true));
        }

        let call = ProviderCall {
            template_id: request.template_id,
            prompt: &prompt,
            params: &request.params,
            digest: &digest,
        };
        let response = self.call_with_retries(&call)?;
        let stored = self.store(&digest, request, response);
        Ok(exchange(stored, false))
    }

    fn call_with_retries(&self, call: &ProviderCall<'_>) -> Result<String, GatewayError> {
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = {
                let _permit = self.in_flight.acquire();
                self.provider.complete(call)
            };
            match result {
                Ok(text) => return Ok(text),
                Err(ProviderError::AuthMissing) => return Err(GatewayError::AuthMissing),
                Err(e) if e.is_retryable() && attempt < max_attempts => {
                    let delay = self.retry.delay(attempt);
                    log::warn!("{} attempt {attempt} failed ({e}); retrying in {delay:?}", call.template_id);
                    std::thread::sleep(delay);
                }
                Err(ProviderError::RateLimited) => return Err(GatewayError::RateLimited { attempts: attempt }),
                Err(e) => return Err(GatewayError::ProviderUnavailable { attempts: attempt, message: e.to_string() }),
            }
        }
    }

    fn lookup(&self, digest: &str) -> Option<String> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(digest) {
            return Some(hit.clone());
        }
        let path = self.cache_dir.as_ref()?.join(format!("{digest}.json"));
        let entry: CacheEntry = serde_json::from_slice(&fs::read(path).ok()?).ok()?;
        let mut cache = self.cache.lock().expect("cache lock");
        Some(cache.entry(digest.to_string()).or_insert(entry.response_text).clone())
    }

    /// Inserts unless another caller got there first; returns the stored text.
    fn store(&self, digest: &str, request: &LlmRequest, response: String) -> String {
        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(existing) = cache.get(digest) {
            return existing.clone();
        }
        if let Some(dir) = &self.cache_dir {
            let entry = CacheEntry {
                template_id: request.template_id,
                bound_inputs: request.bound_inputs.clone(),
                params: request.params.clone(),
                response_text: response.clone(),
            };
            if let Err(e) = write_cache_file(dir, digest, &entry) {
                log::warn!("could not persist cache entry {digest}: {e}");
            }
        }
        cache.insert(digest.to_string(), response.clone());
        response
    }
}

fn write_cache_file(dir: &std::path::Path, digest: &str, entry: &CacheEntry) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{digest}.json.tmp"));
    fs::write(&tmp, serde_json::to_vec_pretty(entry)?)?;
    fs::rename(tmp, dir.join(format!("{digest}.json")))
}
