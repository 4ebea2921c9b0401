//! The single path through which every model interaction flows.
//!
//! [`Gateway`] wraps an [`LlmBackend`]: either [`ScriptedBackend`], which
//! answers from an ordered rule list and embeds with the deterministic n-gram
//! embedder, or [`HttpBackend`], which speaks the OpenAI-compatible
//! chat-completion protocol.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use dbot_core::embed::{NgramEmbedder, DEFAULT_DIM};
use dbot_core::text::word_count;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const ENV_ENDPOINT: &str = "DBOT_LLM_ENDPOINT";
pub const ENV_KEY: &str = "DBOT_LLM_KEY";
pub const ENV_MODEL: &str = "DBOT_LLM_MODEL";
pub const ENV_EMBED_MODEL: &str = "DBOT_LLM_EMBED_MODEL";

pub const DEFAULT_MAX_TOKENS: usize = 1024;
pub const DEFAULT_CONTEXT_LIMIT: usize = 8192;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("no scripted rule matched prompt starting with {prefix:?}")]
    NoMatchingRule { prefix: String },
    #[error("endpoint unavailable: {0}")]
    EndpointUnavailable(String),
    #[error("prompt needs {tokens} tokens but the limit is {limit}")]
    TokenLimitExceeded { tokens: usize, limit: usize },
    #[error("empty text")]
    EmptyText,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed endpoint response: {0}")]
    Protocol(String),
    #[error("invalid scripted rule: {0}")]
    InvalidRule(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub role_preamble: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl PromptRequest {
    /// A single user turn at temperature 0.
    pub fn new(role_preamble: impl Into<String>, user_text: impl Into<String>) -> Self {
        Self {
            role_preamble: role_preamble.into(),
            messages: vec![Message {
                speaker: "user".into(),
                text: user_text.into(),
            }],
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// The text scripted rules are matched against.
    pub fn render(&self) -> String {
        let mut s = self.role_preamble.clone();
        for m in &self.messages {
            if !s.is_empty() {
                s.push_str("\n\n");
            }
            s.push('[');
            s.push_str(&m.speaker);
            s.push_str("]\n");
            s.push_str(&m.text);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Complete,
    Truncated,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: FinishReason,
    pub token_count: usize,
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &PromptRequest) -> Result<Completion, GatewayError>;
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError>;
}

/// Pattern of a scripted rule. In files a matcher starting with `re:` is a
/// regular expression; anything else is a plain substring.
#[derive(Clone)]
pub enum Matcher {
    Substring(String),
    Regex(Regex),
}

impl fmt::Debug for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Matcher::Substring(s) => write!(f, "Substring({s:?})"),
            Matcher::Regex(r) => write!(f, "Regex({:?})", r.as_str()),
        }
    }
}

impl Matcher {
    pub fn parse(pattern: &str) -> Result<Self, GatewayError> {
        match pattern.strip_prefix("re:") {
            Some(re) => Regex::new(re)
                .map(Matcher::Regex)
                .map_err(|e| GatewayError::InvalidRule(e.to_string())),
            None => Ok(Matcher::Substring(pattern.into())),
        }
    }

    fn pattern(&self) -> String {
        match self {
            Matcher::Substring(s) => s.clone(),
            Matcher::Regex(r) => format!("re:{}", r.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RuleFile {
    matcher: String,
    response: String,
    #[serde(default)]
    max_uses: Option<u64>,
}

/// One scripted answer. Regex rules may reference capture groups in the
/// response (`$1`, `${name}`).
#[derive(Debug)]
pub struct ScriptedRule {
    pub matcher: Matcher,
    pub response: String,
    pub max_uses: Option<u64>,
    uses: AtomicU64,
}

impl Clone for ScriptedRule {
    fn clone(&self) -> Self {
        Self {
            matcher: self.matcher.clone(),
            response: self.response.clone(),
            max_uses: self.max_uses,
            uses: AtomicU64::new(self.uses.load(Ordering::SeqCst)),
        }
    }
}

impl ScriptedRule {
    pub fn new(matcher: &str, response: impl Into<String>) -> Result<Self, GatewayError> {
        Ok(Self {
            matcher: Matcher::parse(matcher)?,
            response: response.into(),
            max_uses: None,
            uses: AtomicU64::new(0),
        })
    }

    pub fn with_max_uses(mut self, max_uses: u64) -> Self {
        self.max_uses = Some(max_uses);
        self
    }

    pub fn uses(&self) -> u64 {
        self.uses.load(Ordering::SeqCst)
    }

    fn respond(&self, prompt: &str) -> Option<String> {
        let text = match &self.matcher {
            Matcher::Substring(s) => prompt.contains(s.as_str()).then(|| self.response.clone())?,
            Matcher::Regex(re) => {
                let caps = re.captures(prompt)?;
                let mut out = String::new();
                caps.expand(&self.response, &mut out);
                out
            }
        };
        // claim one use atomically; exhausted rules fall through
        let claimed = match self.max_uses {
            None => {
                self.uses.fetch_add(1, Ordering::SeqCst);
                true
            }
            Some(max) => self
                .uses
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |u| (u < max).then_some(u + 1))
                .is_ok(),
        };
        claimed.then_some(text)
    }
}

/// Parses the rules file format `[{"matcher", "response", "max_uses"}]`.
pub fn parse_rules(json: &str) -> Result<Vec<ScriptedRule>, GatewayError> {
    let raw: Vec<RuleFile> =
        serde_json::from_str(json).map_err(|e| GatewayError::InvalidRule(e.to_string()))?;
    raw.into_iter()
        .map(|r| {
            if r.max_uses == Some(0) {
                return Err(GatewayError::InvalidRule(format!(
                    "max_uses must be positive for {:?}",
                    r.matcher
                )));
            }
            let mut rule = ScriptedRule::new(&r.matcher, r.response)?;
            rule.max_uses = r.max_uses;
            Ok(rule)
        })
        .collect()
}

pub fn rules_to_json(rules: &[ScriptedRule]) -> String {
    let raw: Vec<RuleFile> = rules
        .iter()
        .map(|r| RuleFile {
            matcher: r.matcher.pattern(),
            response: r.response.clone(),
            max_uses: r.max_uses,
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("rules serialize")
}

/// Deterministic backend: first matching rule wins.
#[derive(Debug)]
pub struct ScriptedBackend {
    rules: Vec<ScriptedRule>,
    embedder: NgramEmbedder,
    history: Mutex<Vec<String>>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptedRule>, embedder: NgramEmbedder) -> Self {
        Self {
            rules,
            embedder,
            history: Mutex::new(Vec::new()),
        }
    }

    /// Every rendered prompt seen so far, in call order.
    pub fn history(&self) -> Vec<String> {
        self.history.lock().expect("history lock").clone()
    }

    pub fn rules(&self) -> &[ScriptedRule] {
        &self.rules
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, request: &PromptRequest) -> Result<Completion, GatewayError> {
        let prompt = request.render();
        self.history.lock().expect("history lock").push(prompt.clone());
        let Some(text) = self.rules.iter().find_map(|r| r.respond(&prompt)) else {
            return Err(GatewayError::NoMatchingRule {
                prefix: prompt.chars().take(80).collect(),
            });
        };
        let words = word_count(&text);
        if words > request.max_tokens {
            let cut: Vec<&str> = text.split_whitespace().take(request.max_tokens).collect();
            return Ok(Completion {
                text: cut.join(" "),
                finish_reason: FinishReason::Truncated,
                token_count: request.max_tokens,
            });
        }
        Ok(Completion {
            text,
            finish_reason: FinishReason::Complete,
            token_count: words,
        })
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        self.embedder.embed(text).map_err(|_| GatewayError::EmptyText)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    /// When unset, embeddings come from the local n-gram embedder.
    pub embed_model: Option<String>,
    pub context_limit: usize,
    pub max_attempts: u32,
    pub timeout: Duration,
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn from_env() -> Result<Self, GatewayError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| GatewayError::EndpointUnavailable(format!("{ENV_ENDPOINT} is not set")))?;
        Ok(Self {
            endpoint,
            api_key: std::env::var(ENV_KEY).ok(),
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-4-0613".into()),
            embed_model: std::env::var(ENV_EMBED_MODEL).ok(),
            context_limit: DEFAULT_CONTEXT_LIMIT,
            max_attempts: 3,
            timeout: Duration::from_secs(120),
            backoff: Duration::from_millis(500),
        })
    }
}

/// OpenAI-compatible chat-completion client with retry on transient failures.
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
    fallback_embedder: NgramEmbedder,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.config.endpoint)
            .field("model", &self.config.model)
            .finish()
    }
}

enum Attempt {
    Done(Value),
    Transient(String),
    Fatal(GatewayError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig, seed: u64) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            agent,
            fallback_embedder: NgramEmbedder::new(DEFAULT_DIM, seed),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, GatewayError> {
        let url = self.url(path);
        let mut last = String::new();
        for attempt in 0..self.config.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff * attempt);
            }
            match self.try_post(&url, body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(msg) => {
                    log::warn!("transient failure calling {url} (attempt {}): {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(GatewayError::EndpointUnavailable(last))
    }

    fn try_post(&self, url: &str, body: &Value) -> Attempt {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send(body.to_string()) {
            Ok(r) => r,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        match status {
            200..=299 => match serde_json::from_str(&text) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fatal(GatewayError::Protocol(e.to_string())),
            },
            408 | 429 | 500..=599 => Attempt::Transient(format!("HTTP {status}: {text}")),
            _ => Attempt::Fatal(GatewayError::EndpointUnavailable(format!("HTTP {status}: {text}"))),
        }
    }
}

fn chat_body(model: &str, request: &PromptRequest) -> Value {
    let mut messages = Vec::new();
    if !request.role_preamble.is_empty() {
        messages.push(json!({"role": "system", "content": request.role_preamble}));
    }
    for m in &request.messages {
        let (role, content) = match m.speaker.as_str() {
            "system" | "user" | "assistant" => (m.speaker.as_str(), m.text.clone()),
            other => ("user", format!("[{other}] {}", m.text)),
        };
        messages.push(json!({"role": role, "content": content}));
    }
    json!({
        "model": model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    })
}

fn parse_chat_response(v: &Value) -> Result<Completion, GatewayError> {
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| GatewayError::Protocol("response has no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("length") => FinishReason::Truncated,
        Some("stop") | None => FinishReason::Complete,
        Some(_) if text.is_empty() => FinishReason::Error,
        Some(_) => FinishReason::Complete,
    };
    let token_count = v
        .pointer("/usage/completion_tokens")
        .and_then(Value::as_u64)
        .map(|n| n as usize)
        .unwrap_or_else(|| word_count(&text));
    if text.is_empty() && finish_reason != FinishReason::Error {
        return Err(GatewayError::Protocol("empty completion".into()));
    }
    Ok(Completion {
        text,
        finish_reason,
        token_count,
    })
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: &PromptRequest) -> Result<Completion, GatewayError> {
        let tokens = word_count(&request.render()) + request.max_tokens;
        if tokens > self.config.context_limit {
            return Err(GatewayError::TokenLimitExceeded {
                tokens,
                limit: self.config.context_limit,
            });
        }
        let v = self.post("chat/completions", &chat_body(&self.config.model, request))?;
        parse_chat_response(&v)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        let Some(model) = &self.config.embed_model else {
            return self.fallback_embedder.embed(text).map_err(|_| GatewayError::EmptyText);
        };
        let v = self.post("embeddings", &json!({"model": model, "input": text}))?;
        let mut emb: Vec<f64> = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Protocol("response has no embedding".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| GatewayError::Protocol("non-numeric embedding".into())))
            .collect::<Result<_, _>>()?;
        if !dbot_core::linalg::normalize(&mut emb) {
            return Err(GatewayError::Protocol("zero embedding".into()));
        }
        Ok(emb)
    }
}

/// Cheaply clonable handle shared by every module that talks to a model.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn LlmBackend>,
    scripted: Option<Arc<ScriptedBackend>>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("scripted", &self.scripted.is_some())
            .finish()
    }
}

impl Gateway {
    pub fn scripted(rules: Vec<ScriptedRule>, seed: u64) -> Self {
        Self::scripted_with(rules, NgramEmbedder::new(DEFAULT_DIM, seed))
    }

    pub fn scripted_with(rules: Vec<ScriptedRule>, embedder: NgramEmbedder) -> Self {
        let backend = Arc::new(ScriptedBackend::new(rules, embedder));
        Self {
            backend: backend.clone(),
            scripted: Some(backend),
        }
    }

    pub fn scripted_from_file(path: &Path, seed: u64) -> crate::Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let rules = parse_rules(&text).map_err(|e| crate::Error::parse(path, e))?;
        Ok(Self::scripted(rules, seed))
    }

    pub fn http(config: HttpConfig, seed: u64) -> Self {
        Self::from_backend(Arc::new(HttpBackend::new(config, seed)))
    }

    pub fn from_backend(backend: Arc<dyn LlmBackend>) -> Self {
        Self {
            backend,
            scripted: None,
        }
    }

    /// Rendered prompts seen by the scripted backend (empty for other backends).
    pub fn prompt_history(&self) -> Vec<String> {
        self.scripted.as_ref().map(|s| s.history()).unwrap_or_default()
    }

    pub fn complete(&self, request: &PromptRequest) -> Result<Completion, GatewayError> {
        request.validate()?;
        self.backend.complete(request)
    }

    /// Single-turn completion returning the text. Truncated answers are
    /// accepted with a warning; error completions become errors.
    pub fn ask(&self, role_preamble: &str, user_text: &str) -> Result<String, GatewayError> {
        let c = self.complete(&PromptRequest::new(role_preamble, user_text))?;
        match c.finish_reason {
            FinishReason::Complete => Ok(c.text),
            FinishReason::Truncated => {
                log::warn!("model answer truncated at {} tokens", c.token_count);
                Ok(c.text)
            }
            FinishReason::Error => Err(GatewayError::Protocol(c.text)),
        }
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        self.backend.embed(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(text: &str) -> PromptRequest {
        PromptRequest::new("", text)
    }

    #[test]
    fn first_matching_rule_wins() {
        let g = Gateway::scripted(
            vec![
                ScriptedRule::new("Summarize the provided chunk", "S1").unwrap(),
                ScriptedRule::new("chunk", "S2").unwrap(),
            ],
            0,
        );
        let c = g.complete(&req("Summarize the provided chunk briefly")).unwrap();
        assert_eq!(c.text, "S1");
        assert_eq!(c.finish_reason, FinishReason::Complete);
        assert_eq!(g.complete(&req("another chunk")).unwrap().text, "S2");
    }

    #[test]
    fn empty_rule_set_has_no_match() {
        let g = Gateway::scripted(vec![], 0);
        assert!(matches!(
            g.complete(&req("anything")),
            Err(GatewayError::NoMatchingRule { prefix }) if prefix.contains("anything")
        ));
    }

    #[test]
    fn max_uses_exhausts_rule() {
        let g = Gateway::scripted(
            vec![
                ScriptedRule::new("q", "first").unwrap().with_max_uses(1),
                ScriptedRule::new("q", "second").unwrap(),
            ],
            0,
        );
        assert_eq!(g.ask("", "q").unwrap(), "first");
        assert_eq!(g.ask("", "q").unwrap(), "second");
        assert_eq!(g.ask("", "q").unwrap(), "second");
    }

    #[test]
    fn regex_captures_expand_into_response() {
        let g = Gateway::scripted(vec![ScriptedRule::new(r"re:\[Leaf (\d+)\] causes: x", "Vote: $1").unwrap()], 0);
        assert_eq!(g.ask("", "[Leaf 7] causes: x").unwrap(), "Vote: 7");
    }

    #[test]
    fn long_answers_are_truncated() {
        let g = Gateway::scripted(vec![ScriptedRule::new("", "a b c d e").unwrap()], 0);
        let mut r = req("x");
        r.max_tokens = 2;
        let c = g.complete(&r).unwrap();
        assert_eq!((c.text.as_str(), c.finish_reason, c.token_count), ("a b", FinishReason::Truncated, 2));
    }

    #[test]
    fn invalid_requests_rejected() {
        let g = Gateway::scripted(vec![], 0);
        let mut r = req("x");
        r.temperature = 1.5;
        assert!(matches!(g.complete(&r), Err(GatewayError::InvalidRequest(_))));
        r.temperature = 0.0;
        r.messages.clear();
        assert!(matches!(g.complete(&r), Err(GatewayError::InvalidRequest(_))));
        assert_eq!(g.embed(""), Err(GatewayError::EmptyText));
    }

    #[test]
    fn rules_file_round_trip() {
        let json = r#"[{"matcher": "re:^a", "response": "x", "max_uses": 2}, {"matcher": "b", "response": "y"}]"#;
        let rules = parse_rules(json).unwrap();
        assert_eq!(rules[0].max_uses, Some(2));
        let again = parse_rules(&rules_to_json(&rules)).unwrap();
        assert_eq!(again.len(), 2);
        assert!(matches!(again[0].matcher, Matcher::Regex(_)));
        assert!(parse_rules(r#"[{"matcher": "re:(", "response": ""}]"#).is_err());
    }

    #[test]
    fn history_records_rendered_prompts() {
        let g = Gateway::scripted(vec![ScriptedRule::new("", "ok").unwrap()], 0);
        g.ask("role", "hello").unwrap();
        assert_eq!(g.prompt_history(), ["role\n\n[user]\nhello"]);
    }

    #[test]
    fn scripted_embeddings_are_deterministic() {
        let a = Gateway::scripted(vec![], 5).embed("cpu usage").unwrap();
        let b = Gateway::scripted(vec![], 5).embed("cpu usage").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), DEFAULT_DIM);
    }

    #[test]
    fn concurrent_use_counts_are_exact() {
        let g = Gateway::scripted(vec![ScriptedRule::new("q", "hit").unwrap().with_max_uses(50)], 0);
        let hits = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..20 {
                        if g.ask("", "q").is_ok() {
                            hits.fetch_add(1, Ordering::SeqCst);
                        }
                    }
                });
            }
        });
        assert_eq!(hits.load(Ordering::SeqCst), 50);
    }

    #[test]
    fn chat_wire_format() {
        let mut r = PromptRequest::new("be terse", "hi");
        r.messages.push(Message {
            speaker: "CPU Expert".into(),
            text: "finding".into(),
        });
        let body = chat_body("m", &r);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][2]["content"], "[CPU Expert] finding");
        assert_eq!(body["temperature"], 0.0);

        let resp = json!({"choices": [{"message": {"content": "done"}, "finish_reason": "length"}],
                          "usage": {"completion_tokens": 9}});
        let c = parse_chat_response(&resp).unwrap();
        assert_eq!((c.finish_reason, c.token_count), (FinishReason::Truncated, 9));
        assert!(parse_chat_response(&json!({})).is_err());
    }
}
