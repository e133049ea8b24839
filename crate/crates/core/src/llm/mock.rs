use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ChatRequest, Provider, ProviderFailure, ProviderReply};

/// Scripted failure a mock rule can return instead of text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockError {
    RateLimit,
    Auth,
    Server,
    Timeout,
    BadRequest,
}

impl MockError {
    fn failure(self) -> ProviderFailure {
        let status = |code: u16| ProviderFailure::Status {
            code,
            body: format!("{{\"error\":\"mock {code}\"}}"),
        };
        match self {
            MockError::RateLimit => status(429),
            MockError::Auth => status(401),
            MockError::Server => status(500),
            MockError::BadRequest => status(400),
            MockError::Timeout => ProviderFailure::Timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Error { error: MockError },
}

impl From<&str> for MockReply {
    fn from(text: &str) -> Self {
        MockReply::Text(text.to_string())
    }
}

/// Literal substring or anchored glob over the final message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Contains(String),
    /// `*` matches any run of characters; everything else is literal and the
    /// whole message must match.
    Template(String),
}

impl Pattern {
    pub fn matches(&self, text: &str) -> bool {
        match self {
            Pattern::Contains(needle) => text.contains(needle.as_str()),
            Pattern::Template(template) => glob_match(template, text),
        }
    }
}

fn glob_match(template: &str, text: &str) -> bool {
    let parts: Vec<&str> = template.split('*').collect();
    if parts.len() == 1 {
        return template == text;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if !text.starts_with(first) || text.len() < first.len() + last.len() || !text.ends_with(last) {
        return false;
    }
    let mut rest = &text[first.len()..text.len() - last.len()];
    for middle in &parts[1..parts.len() - 1] {
        match rest.find(middle) {
            Some(at) => rest = &rest[at + middle.len()..],
            None => return false,
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reply: Option<MockReply>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    replies: Vec<MockReply>,
}

/// Replies are served in order; the last one repeats once exhausted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RuleSpec", into = "RuleSpec")]
pub struct MockRule {
    pub pattern: Pattern,
    pub replies: Vec<MockReply>,
}

impl MockRule {
    pub fn contains(needle: &str, replies: impl IntoIterator<Item = impl Into<MockReply>>) -> MockRule {
        MockRule {
            pattern: Pattern::Contains(needle.to_string()),
            replies: replies.into_iter().map(Into::into).collect(),
        }
    }

    pub fn template(template: &str, replies: impl IntoIterator<Item = impl Into<MockReply>>) -> MockRule {
        MockRule {
            pattern: Pattern::Template(template.to_string()),
            replies: replies.into_iter().map(Into::into).collect(),
        }
    }
}

impl TryFrom<RuleSpec> for MockRule {
    type Error = String;

    fn try_from(spec: RuleSpec) -> Result<Self, Self::Error> {
        let pattern = match (spec.contains, spec.template) {
            (Some(c), None) => Pattern::Contains(c),
            (None, Some(t)) => Pattern::Template(t),
            _ => return Err("rule needs exactly one of `contains` or `template`".into()),
        };
        let mut replies = spec.replies;
        if let Some(reply) = spec.reply {
            replies.insert(0, reply);
        }
        if replies.is_empty() {
            return Err("rule needs `reply` or a non-empty `replies`".into());
        }
        Ok(MockRule { pattern, replies })
    }
}

impl From<MockRule> for RuleSpec {
    fn from(rule: MockRule) -> Self {
        let (contains, template) = match rule.pattern {
            Pattern::Contains(c) => (Some(c), None),
            Pattern::Template(t) => (None, Some(t)),
        };
        RuleSpec {
            contains,
            template,
            reply: None,
            replies: rule.replies,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
    /// Reply for unmatched requests when not strict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    pub strict: bool,
}

impl MockScript {
    pub fn strict(rules: Vec<MockRule>) -> MockScript {
        MockScript {
            rules,
            default: None,
            strict: true,
        }
    }

    pub fn load(path: &Path) -> std::io::Result<MockScript> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

type Responder = dyn Fn(&ChatRequest) -> Option<String> + Send + Sync;

struct MockState {
    script: MockScript,
    cursors: Vec<usize>,
    requests: Vec<ChatRequest>,
}

/// Deterministic provider answering from a [`MockScript`].
pub struct MockProvider {
    state: Mutex<MockState>,
    responder: Option<Arc<Responder>>,
}

impl std::fmt::Debug for MockProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockProvider").finish_non_exhaustive()
    }
}

impl MockProvider {
    pub fn new(script: MockScript) -> MockProvider {
        let cursors = vec![0; script.rules.len()];
        MockProvider {
            state: Mutex::new(MockState {
                script,
                cursors,
                requests: Vec::new(),
            }),
            responder: None,
        }
    }

    /// Consulted before the script; `None` falls through to the rules.
    pub fn with_responder(
        script: MockScript,
        responder: impl Fn(&ChatRequest) -> Option<String> + Send + Sync + 'static,
    ) -> MockProvider {
        MockProvider {
            responder: Some(Arc::new(responder)),
            ..MockProvider::new(script)
        }
    }

    pub fn register_script(&self, script: MockScript) {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.cursors = vec![0; script.rules.len()];
        state.script = script;
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).requests.clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).requests.len()
    }
}

impl Provider for MockProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderReply, ProviderFailure> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.requests.push(request.clone());
        if let Some(responder) = &self.responder {
            if let Some(text) = responder(request) {
                return Ok(mock_reply(text, None));
            }
        }
        let last = request.last_content();
        let matched = state.script.rules.iter().position(|r| r.pattern.matches(last));
        let reply = match matched {
            Some(i) => {
                let replies = &state.script.rules[i].replies;
                let reply = replies[state.cursors[i].min(replies.len() - 1)].clone();
                state.cursors[i] += 1;
                return match reply {
                    MockReply::Text(text) => Ok(mock_reply(text, Some(i))),
                    MockReply::Error { error } => Err(error.failure()),
                };
            }
            None if state.script.strict => None,
            None => state.script.default.clone(),
        };
        match reply {
            Some(text) => Ok(mock_reply(text, None)),
            None => {
                let snippet: String = last.chars().take(80).collect();
                Err(ProviderFailure::Unmatched(snippet))
            }
        }
    }
}

fn mock_reply(text: String, rule: Option<usize>) -> ProviderReply {
    let mut meta = BTreeMap::new();
    meta.insert("provider".to_string(), Value::from("mock"));
    if let Some(i) = rule {
        meta.insert("rule".to_string(), Value::from(i));
    }
    ProviderReply { content: text, meta }
}
