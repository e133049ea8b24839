//! Uniform chat-completion access to hosted models.
//!
//! A [`Gateway`] routes each request to a provider by model prefix, consults
//! a content-addressed disk cache, bounds in-flight requests per provider and
//! retries transient failures with exponential backoff. The [`MockProvider`]
//! answers from an ordered rule script so pipelines can run offline.

mod cache;
mod config;
mod gate;
mod mock;
mod providers;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use cache::{CacheEnvelope, CacheKey, DiskCache};
pub use config::{GatewayConfig, ProviderConfig, ProviderKind, RetryPolicy, RouteConfig};
pub use gate::{AdmissionGate, Permit};
pub use mock::{MockError, MockProvider, MockReply, MockRule, MockScript, Pattern};
pub use providers::{AnthropicProvider, GeminiProvider, HttpSettings, OpenAiProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Message {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Message {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Message {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Sampling overrides. Absent fields fall back to provider defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    #[serde(default)]
    pub sampling: Sampling,
    /// Extra discriminator mixed into the cache key, e.g. a retry attempt
    /// number, so deliberate re-asks are not served from cache.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_tag: Option<String>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<Message>) -> ChatRequest {
        ChatRequest {
            model: model.into(),
            messages,
            sampling: Sampling::default(),
            cache_tag: None,
        }
    }

    pub fn single_user(model: impl Into<String>, content: impl Into<String>) -> ChatRequest {
        ChatRequest::new(model, vec![Message::user(content)])
    }

    pub fn with_cache_tag(mut self, tag: impl Into<String>) -> ChatRequest {
        self.cache_tag = Some(tag.into());
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        match self.messages.first() {
            None => Err(GatewayError::InvalidRequest("no messages".into())),
            Some(m) if m.role == Role::Assistant => Err(GatewayError::InvalidRequest(
                "first message must be system or user".into(),
            )),
            Some(_) => Ok(()),
        }
    }

    pub fn last_content(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    /// Assistant text exactly as returned.
    pub content: String,
    pub from_cache: bool,
    pub latency_ms: u64,
    #[serde(default)]
    pub provider_meta: BTreeMap<String, Value>,
}

/// A successful provider reply before gateway bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderReply {
    pub content: String,
    pub meta: BTreeMap<String, Value>,
}

impl ProviderReply {
    pub fn text(content: impl Into<String>) -> ProviderReply {
        ProviderReply {
            content: content.into(),
            meta: BTreeMap::new(),
        }
    }
}

/// Raw failure reported by a provider; the gateway decides whether to retry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderFailure {
    Status { code: u16, body: String },
    Timeout,
    Transport(String),
    MissingCredentials(String),
    Malformed(String),
    Unmatched(String),
}

impl ProviderFailure {
    fn is_transient(&self) -> bool {
        match self {
            ProviderFailure::Status { code, .. } => *code == 429 || *code >= 500,
            ProviderFailure::Timeout | ProviderFailure::Transport(_) => true,
            _ => false,
        }
    }
}

pub trait Provider: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<ProviderReply, ProviderFailure>;
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("authentication failed for provider {provider}: {detail}")]
    Auth { provider: String, detail: String },
    #[error("provider {provider} still rate limited after {attempts} attempts")]
    RateLimitExhausted { provider: String, attempts: u32 },
    #[error("provider {provider} failed (status {status:?}): {excerpt}")]
    Provider {
        provider: String,
        status: Option<u16>,
        excerpt: String,
    },
    #[error("provider {provider} timed out after {attempts} attempts")]
    Timeout { provider: String, attempts: u32 },
    #[error("no provider route for model `{0}`")]
    NoRoute(String),
    #[error("mock script has no rule for request: {0}")]
    MockUnmatched(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache i/o: {0}")]
    Cache(#[from] std::io::Error),
}

impl GatewayError {
    /// Errors that should stop a whole run rather than fail one call.
    pub fn is_hard(&self) -> bool {
        !matches!(self, GatewayError::Provider { .. } | GatewayError::Timeout { .. })
    }
}

fn excerpt(text: &str) -> String {
    const LIMIT: usize = 300;
    match text.char_indices().nth(LIMIT) {
        Some((cut, _)) => format!("{}...", &text[..cut]),
        None => text.to_string(),
    }
}

struct ProviderSlot {
    provider: Arc<dyn Provider>,
    gate: AdmissionGate,
}

struct Route {
    prefix: String,
    provider: String,
}

pub struct Gateway {
    routes: Vec<Route>,
    providers: BTreeMap<String, ProviderSlot>,
    mock: Option<Arc<MockProvider>>,
    force_provider: Option<String>,
    cache: Option<DiskCache>,
    retry: RetryPolicy,
    prompt_version: String,
    sampling_override: Option<Sampling>,
    calls: AtomicU64,
    remote_calls: AtomicU64,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("providers", &self.providers.keys().collect::<Vec<_>>())
            .field("prompt_version", &self.prompt_version)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn builder() -> GatewayBuilder {
        GatewayBuilder::default()
    }

    /// Gateway over the configured HTTP providers plus the mock provider.
    pub fn from_config(config: &GatewayConfig, cache_dir: Option<PathBuf>, prompt_version: &str) -> GatewayBuilder {
        let mut builder = Gateway::builder()
            .retry(config.retry)
            .prompt_version(prompt_version)
            .max_concurrency(config.max_concurrency);
        if let Some(s) = config.sampling {
            builder = builder.sampling_override(s);
        }
        for (name, provider) in &config.providers {
            let settings = HttpSettings::from_config(provider, config.timeout_secs);
            let built: Option<Arc<dyn Provider>> = match provider.kind {
                ProviderKind::Openai | ProviderKind::Local => Some(Arc::new(OpenAiProvider::new(settings))),
                ProviderKind::Anthropic => Some(Arc::new(AnthropicProvider::new(settings))),
                ProviderKind::Gemini => Some(Arc::new(GeminiProvider::new(settings))),
                ProviderKind::Mock => None,
            };
            match (built, provider.max_concurrency) {
                (Some(p), Some(limit)) => builder = builder.provider_with_limit(name, p, limit),
                (Some(p), None) => builder = builder.provider(name, p),
                (None, _) => builder = builder.mock_named(name, Arc::new(MockProvider::new(MockScript::default()))),
            }
        }
        for route in &config.routes {
            builder = builder.route(&route.prefix, &route.provider);
        }
        if let Some(dir) = cache_dir {
            builder = builder.cache_dir(dir);
        }
        builder
    }

    /// Resolves a model id to (provider name, upstream model id).
    pub fn route<'a>(&self, model: &'a str) -> Result<(&str, &'a str), GatewayError> {
        if let Some(forced) = &self.force_provider {
            return Ok((forced.as_str(), model));
        }
        if let Some((qualifier, rest)) = model.split_once('/') {
            if let Some((name, _)) = self.providers.get_key_value(qualifier) {
                return Ok((name.as_str(), rest));
            }
        }
        let lower = model.to_ascii_lowercase();
        self.routes
            .iter()
            .find(|r| lower.starts_with(&r.prefix.to_ascii_lowercase()))
            .filter(|r| self.providers.contains_key(&r.provider))
            .map(|r| (r.provider.as_str(), model))
            .ok_or_else(|| GatewayError::NoRoute(model.to_string()))
    }

    pub fn prompt_version(&self) -> &str {
        &self.prompt_version
    }

    /// All `complete` calls, cache hits included.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Requests that reached a provider, retries included.
    pub fn remote_call_count(&self) -> u64 {
        self.remote_calls.load(Ordering::SeqCst)
    }

    pub fn gate(&self, provider: &str) -> Option<&AdmissionGate> {
        self.providers.get(provider).map(|s| &s.gate)
    }

    pub fn mock(&self) -> Option<&Arc<MockProvider>> {
        self.mock.as_ref()
    }

    pub fn register_mock_script(&self, script: MockScript) -> Result<(), GatewayError> {
        let mock = self
            .mock
            .as_ref()
            .ok_or_else(|| GatewayError::InvalidRequest("gateway has no mock provider".into()))?;
        mock.register_script(script);
        Ok(())
    }

    pub fn cache_key(&self, request: &ChatRequest) -> CacheKey {
        CacheKey::for_request(&self.effective(request), &self.prompt_version)
    }

    fn effective(&self, request: &ChatRequest) -> ChatRequest {
        let mut req = request.clone();
        if let Some(s) = self.sampling_override {
            req.sampling = s;
        }
        req
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        request.validate()?;
        let request = self.effective(request);
        let (provider_name, upstream_model) = self.route(&request.model)?;
        let slot = &self.providers[provider_name];
        let started = Instant::now();

        let key = CacheKey::for_request(&request, &self.prompt_version);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key)? {
                return Ok(ChatResponse {
                    content: hit.content,
                    from_cache: true,
                    latency_ms: started.elapsed().as_millis() as u64,
                    provider_meta: hit.provider_meta,
                });
            }
        }

        let mut upstream = request.clone();
        upstream.model = upstream_model.to_string();
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        let reply = loop {
            let result = {
                let _permit = slot.gate.acquire();
                self.remote_calls.fetch_add(1, Ordering::SeqCst);
                slot.provider.send(&upstream)
            };
            match result {
                Ok(reply) => break reply,
                Err(failure) if failure.is_transient() && attempt < max_attempts => {
                    let delay = self.retry.delay_before(attempt + 1);
                    log::warn!("{provider_name}: attempt {attempt} failed ({failure:?}); retrying in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(failure) => return Err(classify(provider_name, failure, attempt)),
            }
        };

        if let Some(cache) = &self.cache {
            cache.put(
                &key,
                &CacheEnvelope {
                    digest: key.as_str().to_string(),
                    model: request.model.clone(),
                    prompt_version: self.prompt_version.clone(),
                    content: reply.content.clone(),
                    provider_meta: reply.meta.clone(),
                },
            )?;
        }
        Ok(ChatResponse {
            content: reply.content,
            from_cache: false,
            latency_ms: started.elapsed().as_millis() as u64,
            provider_meta: reply.meta,
        })
    }
}

fn classify(provider: &str, failure: ProviderFailure, attempts: u32) -> GatewayError {
    let provider = provider.to_string();
    match failure {
        ProviderFailure::Status { code: 401 | 403, body } => GatewayError::Auth {
            provider,
            detail: excerpt(&body),
        },
        ProviderFailure::MissingCredentials(detail) => GatewayError::Auth { provider, detail },
        ProviderFailure::Status { code: 429, .. } => GatewayError::RateLimitExhausted { provider, attempts },
        ProviderFailure::Status { code, body } => GatewayError::Provider {
            provider,
            status: Some(code),
            excerpt: excerpt(&body),
        },
        ProviderFailure::Timeout => GatewayError::Timeout { provider, attempts },
        ProviderFailure::Transport(detail) | ProviderFailure::Malformed(detail) => GatewayError::Provider {
            provider,
            status: None,
            excerpt: excerpt(&detail),
        },
        ProviderFailure::Unmatched(detail) => GatewayError::MockUnmatched(detail),
    }
}

#[derive(Default)]
pub struct GatewayBuilder {
    routes: Vec<Route>,
    providers: Vec<(String, Arc<dyn Provider>, Option<usize>)>,
    mock: Option<(String, Arc<MockProvider>)>,
    force_mock: bool,
    cache_dir: Option<PathBuf>,
    retry: Option<RetryPolicy>,
    prompt_version: Option<String>,
    sampling_override: Option<Sampling>,
    max_concurrency: Option<usize>,
}

impl GatewayBuilder {
    pub fn provider(mut self, name: &str, provider: Arc<dyn Provider>) -> Self {
        self.providers.push((name.to_string(), provider, None));
        self
    }

    pub fn provider_with_limit(mut self, name: &str, provider: Arc<dyn Provider>, limit: usize) -> Self {
        self.providers.push((name.to_string(), provider, Some(limit)));
        self
    }

    /// Registers the mock provider under the name `mock` with a `mock` route.
    pub fn mock(self, mock: Arc<MockProvider>) -> Self {
        self.mock_named("mock", mock).route("mock", "mock")
    }

    fn mock_named(mut self, name: &str, mock: Arc<MockProvider>) -> Self {
        self.mock = Some((name.to_string(), mock));
        self
    }

    /// Sends every model id to the mock provider.
    pub fn force_mock(mut self, mock: Arc<MockProvider>) -> Self {
        self.force_mock = true;
        self.mock_named("mock", mock)
    }

    pub fn route(mut self, prefix: &str, provider: &str) -> Self {
        self.routes.push(Route {
            prefix: prefix.to_string(),
            provider: provider.to_string(),
        });
        self
    }

    pub fn cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = Some(retry);
        self
    }

    pub fn prompt_version(mut self, version: &str) -> Self {
        self.prompt_version = Some(version.to_string());
        self
    }

    pub fn sampling_override(mut self, sampling: Sampling) -> Self {
        self.sampling_override = Some(sampling);
        self
    }

    /// Default in-flight bound per provider.
    pub fn max_concurrency(mut self, limit: usize) -> Self {
        self.max_concurrency = Some(limit);
        self
    }

    pub fn build(self) -> Result<Gateway, GatewayError> {
        let default_limit = self.max_concurrency.unwrap_or(4).max(1);
        let mut providers = BTreeMap::new();
        for (name, provider, limit) in self.providers {
            providers.insert(
                name,
                ProviderSlot {
                    provider,
                    gate: AdmissionGate::new(limit.unwrap_or(default_limit)),
                },
            );
        }
        let mut force_provider = None;
        let mock = match self.mock {
            Some((name, mock)) => {
                let as_provider: Arc<dyn Provider> = mock.clone();
                providers.insert(
                    name.clone(),
                    ProviderSlot {
                        provider: as_provider,
                        gate: AdmissionGate::new(default_limit),
                    },
                );
                if self.force_mock {
                    force_provider = Some(name);
                }
                Some(mock)
            }
            None => None,
        };
        let cache = self.cache_dir.map(DiskCache::open).transpose()?;
        Ok(Gateway {
            routes: self.routes,
            providers,
            mock,
            force_provider,
            cache,
            retry: self.retry.unwrap_or_default(),
            prompt_version: self.prompt_version.unwrap_or_else(|| "unversioned".to_string()),
            sampling_override: self.sampling_override,
            calls: AtomicU64::new(0),
            remote_calls: AtomicU64::new(0),
        })
    }
}

impl RetryPolicy {
    /// Backoff before attempt `n` (2-based; attempt 1 has no delay).
    pub fn delay_before(&self, attempt: u32) -> Duration {
        if attempt <= 1 {
            return Duration::ZERO;
        }
        let factor = 1u64.checked_shl(attempt - 2).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}
