use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 1_000,
            max_delay_ms: 30_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Openai,
    Anthropic,
    Gemini,
    Local,
    Mock,
}

impl ProviderKind {
    pub fn default_base_url(self) -> &'static str {
        match self {
            ProviderKind::Openai => "https://api.openai.com/v1",
            ProviderKind::Anthropic => "https://api.anthropic.com",
            ProviderKind::Gemini => "https://generativelanguage.googleapis.com/v1beta",
            ProviderKind::Local => "http://localhost:8000/v1",
            ProviderKind::Mock => "",
        }
    }

    pub fn default_key_env(self) -> Option<&'static str> {
        match self {
            ProviderKind::Openai => Some("OPENAI_API_KEY"),
            ProviderKind::Anthropic => Some("ANTHROPIC_API_KEY"),
            ProviderKind::Gemini => Some("GEMINI_API_KEY"),
            ProviderKind::Local => Some("LOCAL_LLM_API_KEY"),
            ProviderKind::Mock => None,
        }
    }

    /// Whether requests may proceed without a key.
    pub fn key_optional(self) -> bool {
        matches!(self, ProviderKind::Local | ProviderKind::Mock)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_concurrency: Option<usize>,
}

impl ProviderConfig {
    pub fn of(kind: ProviderKind) -> ProviderConfig {
        ProviderConfig {
            kind,
            base_url: None,
            api_key_env: None,
            max_concurrency: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    pub prefix: String,
    pub provider: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayConfig {
    pub providers: BTreeMap<String, ProviderConfig>,
    /// Checked in order; first case-insensitive prefix match wins.
    pub routes: Vec<RouteConfig>,
    pub max_concurrency: usize,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        let providers = [
            ("openai", ProviderKind::Openai),
            ("anthropic", ProviderKind::Anthropic),
            ("gemini", ProviderKind::Gemini),
            ("local", ProviderKind::Local),
            ("mock", ProviderKind::Mock),
        ]
        .into_iter()
        .map(|(name, kind)| (name.to_string(), ProviderConfig::of(kind)))
        .collect();
        let routes = [
            ("mock", "mock"),
            ("gpt-", "openai"),
            ("o1", "openai"),
            ("claude-", "anthropic"),
            ("gemini-", "gemini"),
            ("meta-llama", "local"),
            ("llama", "local"),
            ("gemma", "local"),
            ("qwen", "local"),
            ("mistral", "local"),
        ]
        .into_iter()
        .map(|(prefix, provider)| RouteConfig {
            prefix: prefix.to_string(),
            provider: provider.to_string(),
        })
        .collect();
        GatewayConfig {
            providers,
            routes,
            max_concurrency: 4,
            timeout_secs: 120,
            retry: RetryPolicy::default(),
            sampling: None,
        }
    }
}
