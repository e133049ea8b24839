use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::{json, Map, Value};

use super::{ChatRequest, ProviderConfig, ProviderFailure, ProviderKind, ProviderReply, Role};

const ANTHROPIC_VERSION: &str = "2023-06-01";
const ANTHROPIC_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub kind: ProviderKind,
    pub base_url: String,
    pub api_key_env: Option<String>,
    pub timeout: Duration,
}

impl HttpSettings {
    pub fn from_config(config: &ProviderConfig, timeout_secs: u64) -> HttpSettings {
        HttpSettings {
            kind: config.kind,
            base_url: config
                .base_url
                .clone()
                .unwrap_or_else(|| config.kind.default_base_url().to_string())
                .trim_end_matches('/')
                .to_string(),
            api_key_env: config
                .api_key_env
                .clone()
                .or_else(|| config.kind.default_key_env().map(str::to_string)),
            timeout: Duration::from_secs(timeout_secs.max(1)),
        }
    }

    fn api_key(&self) -> Result<Option<String>, ProviderFailure> {
        let key = self
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        match key {
            Some(k) => Ok(Some(k)),
            None if self.kind.key_optional() => Ok(None),
            None => Err(ProviderFailure::MissingCredentials(format!(
                "environment variable {} is not set",
                self.api_key_env.as_deref().unwrap_or("<unset>")
            ))),
        }
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into()
    }
}

fn post_json(
    agent: &ureq::Agent,
    url: &str,
    headers: &[(&str, String)],
    body: &Value,
) -> Result<Value, ProviderFailure> {
    let mut request = agent.post(url);
    for (name, value) in headers {
        request = request.header(*name, value.as_str());
    }
    let mut response = request
        .content_type("application/json")
        .send(body.to_string())
        .map_err(|e| match e {
            ureq::Error::Timeout(_) => ProviderFailure::Timeout,
            other => ProviderFailure::Transport(other.to_string()),
        })?;
    let code = response.status().as_u16();
    let text = response.body_mut().read_to_string().map_err(|e| match e {
        ureq::Error::Timeout(_) => ProviderFailure::Timeout,
        other => ProviderFailure::Transport(other.to_string()),
    })?;
    if !(200..300).contains(&code) {
        return Err(ProviderFailure::Status { code, body: text });
    }
    serde_json::from_str(&text).map_err(|e| ProviderFailure::Malformed(format!("response is not JSON: {e}")))
}

fn sampling_fields(request: &ChatRequest, body: &mut Map<String, Value>) {
    if let Some(t) = request.sampling.temperature {
        body.insert("temperature".into(), json!(t));
    }
    if let Some(p) = request.sampling.top_p {
        body.insert("top_p".into(), json!(p));
    }
}

fn meta_from(kind: &str, response: &Value, keys: &[&str]) -> BTreeMap<String, Value> {
    let mut meta = BTreeMap::new();
    meta.insert("provider".to_string(), Value::from(kind));
    for key in keys {
        if let Some(v) = response.get(*key) {
            meta.insert((*key).to_string(), v.clone());
        }
    }
    meta
}

fn malformed(what: &str) -> ProviderFailure {
    ProviderFailure::Malformed(format!("missing {what} in response"))
}

/// OpenAI chat-completions API; also used for local OpenAI-compatible servers.
#[derive(Debug)]
pub struct OpenAiProvider {
    settings: HttpSettings,
    agent: ureq::Agent,
}

impl OpenAiProvider {
    pub fn new(settings: HttpSettings) -> OpenAiProvider {
        let agent = settings.agent();
        OpenAiProvider { settings, agent }
    }

    pub fn build_body(request: &ChatRequest) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), json!(request.model));
        body.insert("messages".into(), json!(request.messages));
        sampling_fields(request, &mut body);
        Value::Object(body)
    }

    pub fn parse_body(response: &Value) -> Result<ProviderReply, ProviderFailure> {
        let content = response
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed("choices[0].message.content"))?;
        Ok(ProviderReply {
            content: content.to_string(),
            meta: meta_from("openai", response, &["id", "model", "usage"]),
        })
    }
}

impl super::Provider for OpenAiProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderReply, ProviderFailure> {
        let mut headers = Vec::new();
        if let Some(key) = self.settings.api_key()? {
            headers.push(("Authorization", format!("Bearer {key}")));
        }
        let url = format!("{}/chat/completions", self.settings.base_url);
        let response = post_json(&self.agent, &url, &headers, &Self::build_body(request))?;
        Self::parse_body(&response)
    }
}

/// Anthropic messages API.
#[derive(Debug)]
pub struct AnthropicProvider {
    settings: HttpSettings,
    agent: ureq::Agent,
}

impl AnthropicProvider {
    pub fn new(settings: HttpSettings) -> AnthropicProvider {
        let agent = settings.agent();
        AnthropicProvider { settings, agent }
    }

    pub fn build_body(request: &ChatRequest) -> Value {
        let system: Vec<&str> = request
            .messages
            .iter()
            .filter(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
            .collect();
        let messages: Vec<Value> = request
            .messages
            .iter()
            .filter(|m| m.role != Role::System)
            .map(|m| json!({"role": m.role, "content": m.content}))
            .collect();
        let mut body = Map::new();
        body.insert("model".into(), json!(request.model));
        body.insert("max_tokens".into(), json!(ANTHROPIC_MAX_TOKENS));
        if !system.is_empty() {
            body.insert("system".into(), json!(system.join("\n\n")));
        }
        body.insert("messages".into(), Value::Array(messages));
        sampling_fields(request, &mut body);
        Value::Object(body)
    }

    pub fn parse_body(response: &Value) -> Result<ProviderReply, ProviderFailure> {
        let blocks = response
            .get("content")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("content"))?;
        let content: String = blocks
            .iter()
            .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
            .filter_map(|b| b.get("text").and_then(Value::as_str))
            .collect();
        Ok(ProviderReply {
            content,
            meta: meta_from("anthropic", response, &["id", "model", "stop_reason", "usage"]),
        })
    }
}

impl super::Provider for AnthropicProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderReply, ProviderFailure> {
        let mut headers = vec![("anthropic-version", ANTHROPIC_VERSION.to_string())];
        if let Some(key) = self.settings.api_key()? {
            headers.push(("x-api-key", key));
        }
        let url = format!("{}/v1/messages", self.settings.base_url);
        let response = post_json(&self.agent, &url, &headers, &Self::build_body(request))?;
        Self::parse_body(&response)
    }
}

/// Gemini generateContent API.
#[derive(Debug)]
pub struct GeminiProvider {
    settings: HttpSettings,
    agent: ureq::Agent,
}

impl GeminiProvider {
    pub fn new(settings: HttpSettings) -> GeminiProvider {
        let agent = settings.agent();
        GeminiProvider { settings, agent }
    }

    pub fn build_body(request: &ChatRequest) -> Value {
        let system: Vec<Value> = request
            .messages
            .iter()
            .filter(|m| m.role == Role::System)
            .map(|m| json!({"text": m.content}))
            .collect();
        let contents: Vec<Value> = request
            .messages
            .iter()
            .filter(|m| m.role != Role::System)
            .map(|m| {
                let role = if m.role == Role::Assistant { "model" } else { "user" };
                json!({"role": role, "parts": [{"text": m.content}]})
            })
            .collect();
        let mut body = Map::new();
        if !system.is_empty() {
            body.insert("systemInstruction".into(), json!({"parts": system}));
        }
        body.insert("contents".into(), Value::Array(contents));
        let mut generation = Map::new();
        if let Some(t) = request.sampling.temperature {
            generation.insert("temperature".into(), json!(t));
        }
        if let Some(p) = request.sampling.top_p {
            generation.insert("topP".into(), json!(p));
        }
        if !generation.is_empty() {
            body.insert("generationConfig".into(), Value::Object(generation));
        }
        Value::Object(body)
    }

    pub fn parse_body(response: &Value) -> Result<ProviderReply, ProviderFailure> {
        let parts = response
            .pointer("/candidates/0/content/parts")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("candidates[0].content.parts"))?;
        let content: String = parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect();
        Ok(ProviderReply {
            content,
            meta: meta_from("gemini", response, &["modelVersion", "usageMetadata"]),
        })
    }
}

impl super::Provider for GeminiProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderReply, ProviderFailure> {
        let mut headers = Vec::new();
        if let Some(key) = self.settings.api_key()? {
            headers.push(("x-goog-api-key", key));
        }
        let url = format!("{}/models/{}:generateContent", self.settings.base_url, request.model);
        let response = post_json(&self.agent, &url, &headers, &Self::build_body(request))?;
        Self::parse_body(&response)
    }
}
