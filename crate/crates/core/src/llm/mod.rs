//! Chat-completion access for the generator and the relevance checker.

mod prompts;
mod verdict;

use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::transport::{HttpTransport, RetryPolicy, Transport, TransportError};

pub use prompts::{
    language_name, PromptLanguage, PromptSet, PromptTemplate, RenderedPrompt, CHUNK_DELIMITER,
};
pub use verdict::{parse_verdict, RelevanceVerdict, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("{0} prompt must not be empty")]
    EmptyPrompt(&'static str),
    #[error("relevance check needs at least one chunk")]
    NoChunks,
    #[error("scripted backend exhausted after {calls} calls")]
    ScriptExhausted { calls: usize },
    #[error("chat backend failed: {0}")]
    Transport(#[from] TransportError),
    #[error("malformed chat response: {0}")]
    MalformedResponse(String),
    #[error("invalid LLM configuration: {0}")]
    InvalidConfig(String),
    #[error("prompt template: {0}")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmRole {
    Generator,
    Checker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LlmBackendKind {
    #[default]
    Http,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub role: LlmRole,
    /// Normally supplied through the environment rather than a config file.
    #[serde(default)]
    pub endpoint_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default = "default_llm_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub backend: LlmBackendKind,
    /// JSON array of canned completions, for the scripted backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<String>,
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_llm_timeout_ms() -> u64 {
    60_000
}

impl LlmConfig {
    /// Generator defaults: temperature 0.1.
    pub fn generator() -> Self {
        Self {
            role: LlmRole::Generator,
            endpoint_url: String::new(),
            model_id: "generator".into(),
            temperature: 0.1,
            max_tokens: 512,
            timeout_ms: default_llm_timeout_ms(),
            backend: LlmBackendKind::Http,
            script_path: None,
            api_key: None,
        }
    }

    /// Checker defaults: temperature 0.0.
    pub fn checker() -> Self {
        Self {
            role: LlmRole::Checker,
            model_id: "checker".into(),
            temperature: 0.0,
            max_tokens: 256,
            ..Self::generator()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidConfig("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Builds the backend this config describes.
    pub fn build(&self) -> Result<Arc<dyn ChatBackend>, LlmError> {
        self.validate()?;
        match self.backend {
            LlmBackendKind::Http => {
                if self.endpoint_url.is_empty() {
                    return Err(LlmError::InvalidConfig(format!(
                        "{:?} backend has no endpoint_url",
                        self.role
                    )));
                }
                Ok(Arc::new(HttpChatBackend::new(
                    &self.endpoint_url,
                    self.api_key.clone(),
                    Arc::new(HttpTransport::default()),
                )))
            }
            LlmBackendKind::Scripted => {
                let path = self.script_path.as_deref().ok_or_else(|| {
                    LlmError::InvalidConfig("scripted backend needs script_path".into())
                })?;
                Ok(Arc::new(ScriptedBackend::from_file(Path::new(path))?))
            }
        }
    }

    fn request(&self, system_prompt: &str, user_prompt: &str) -> ChatRequest {
        ChatRequest {
            model: self.model_id.clone(),
            system_prompt: system_prompt.to_string(),
            user_prompt: user_prompt.to_string(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            timeout: Duration::from_millis(self.timeout_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// Sends one system + user exchange and returns the completion verbatim.
pub fn chat_complete(
    backend: &dyn ChatBackend,
    cfg: &LlmConfig,
    system_prompt: &str,
    user_prompt: &str,
) -> Result<String, LlmError> {
    if system_prompt.trim().is_empty() {
        return Err(LlmError::EmptyPrompt("system"));
    }
    if user_prompt.trim().is_empty() {
        return Err(LlmError::EmptyPrompt("user"));
    }
    backend.complete(&cfg.request(system_prompt, user_prompt))
}

/// Asks the checker whether `chunks` answer `query` and parses its verdict.
pub fn check_relevance(
    backend: &dyn ChatBackend,
    cfg: &LlmConfig,
    prompts: &PromptSet,
    language: PromptLanguage,
    query: &str,
    chunks: &[&str],
) -> Result<RelevanceVerdict, LlmError> {
    if chunks.is_empty() {
        return Err(LlmError::NoChunks);
    }
    let prompt = prompts
        .checker(language)
        .render(query, chunks, language_name(query, language));
    let raw = chat_complete(backend, cfg, &prompt.system, &prompt.user)?;
    Ok(parse_verdict(&raw))
}

/// One recorded call to a [`ScriptedBackend`].
#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub model: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Replays canned completions in order and records every call.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    script: Vec<String>,
    log: Mutex<Vec<CallRecord>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(script: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            script: script.into_iter().map(Into::into).collect(),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Reads a JSON array of strings.
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| LlmError::InvalidConfig(format!("script {}: {e}", path.display())))?;
        let script: Vec<String> = serde_json::from_str(&src)
            .map_err(|e| LlmError::InvalidConfig(format!("script {}: {e}", path.display())))?;
        Ok(Self::new(script))
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        self.log.lock().expect("scripted log poisoned").clone()
    }

    pub fn calls(&self) -> usize {
        self.log.lock().expect("scripted log poisoned").len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut log = self.log.lock().expect("scripted log poisoned");
        let reply = self
            .script
            .get(log.len())
            .cloned()
            .ok_or(LlmError::ScriptExhausted { calls: log.len() })?;
        log.push(CallRecord {
            model: request.model.clone(),
            system_prompt: request.system_prompt.clone(),
            user_prompt: request.user_prompt.clone(),
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        });
        Ok(reply)
    }
}

/// Client for the chat protocol:
/// `POST {"model", "messages", "temperature", "max_tokens"}` →
/// `{"choices": [{"message": {"content"}}]}`.
pub struct HttpChatBackend {
    endpoint_url: String,
    api_key: Option<String>,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
}

impl HttpChatBackend {
    pub fn new(endpoint_url: &str, api_key: Option<String>, transport: Arc<dyn Transport>) -> Self {
        Self {
            endpoint_url: endpoint_url.to_string(),
            api_key,
            transport,
            retry: RetryPolicy::new(2, Duration::from_millis(500)),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let body = json!({
            "model": request.model,
            "messages": [
                { "role": "system", "content": request.system_prompt },
                { "role": "user", "content": request.user_prompt },
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let resp = self.retry.run(|| {
            self.transport
                .post_json(&self.endpoint_url, &headers, &body, request.timeout)
        })?;
        extract_content(&resp)
    }
}

fn extract_content(resp: &Value) -> Result<String, LlmError> {
    resp.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_defaults() {
        assert_eq!(LlmConfig::generator().temperature, 0.1);
        assert_eq!(LlmConfig::checker().temperature, 0.0);
        assert_eq!(LlmConfig::checker().role, LlmRole::Checker);
    }

    #[test]
    fn scripted_replay_and_exhaustion() {
        let b = ScriptedBackend::new(["hello"]);
        let cfg = LlmConfig::generator();
        assert_eq!(chat_complete(&b, &cfg, "sys", "hi").unwrap(), "hello");
        assert_eq!(b.calls(), 1);
        assert_eq!(
            chat_complete(&b, &cfg, "sys", "again"),
            Err(LlmError::ScriptExhausted { calls: 1 })
        );
        assert_eq!(b.calls(), 1);
        let log = b.call_log();
        assert_eq!(log[0].user_prompt, "hi");
        assert_eq!(log[0].temperature, 0.1);
    }

    #[test]
    fn empty_prompts_rejected() {
        let b = ScriptedBackend::new(["x"]);
        let cfg = LlmConfig::generator();
        assert_eq!(chat_complete(&b, &cfg, "", "u"), Err(LlmError::EmptyPrompt("system")));
        assert_eq!(chat_complete(&b, &cfg, "s", " "), Err(LlmError::EmptyPrompt("user")));
        assert_eq!(b.calls(), 0);
    }

    #[test]
    fn check_relevance_parses_replies() {
        let prompts = PromptSet::default();
        let cfg = LlmConfig::checker();
        let b = ScriptedBackend::new([
            "VERDICT: RELEVANT",
            "VERDICT: IRRELEVANT\nREFINED_QUERY: কোন সালে ট্যুরিস্ট পুলিশ গঠিত হয়?",
            "I think these look fine.",
        ]);
        let run = || check_relevance(&b, &cfg, &prompts, PromptLanguage::En, "q", &["chunk"]).unwrap();
        let v = run();
        assert_eq!((v.verdict, v.parse_failed), (Verdict::Relevant, false));
        let v = run();
        assert_eq!(v.verdict, Verdict::Irrelevant);
        assert_eq!(v.refined_query.as_deref(), Some("কোন সালে ট্যুরিস্ট পুলিশ গঠিত হয়?"));
        let v = run();
        assert_eq!((v.verdict, v.parse_failed), (Verdict::Relevant, true));
        let log = b.call_log();
        assert!(log[0].user_prompt.contains("preserving its original meaning"));
        assert!(log[0].user_prompt.contains("chunk"));
        assert_eq!(log[0].temperature, 0.0);
    }

    #[test]
    fn check_relevance_needs_chunks() {
        let b = ScriptedBackend::new(["VERDICT: RELEVANT"]);
        let r = check_relevance(&b, &LlmConfig::checker(), &PromptSet::default(), PromptLanguage::En, "q", &[]);
        assert_eq!(r, Err(LlmError::NoChunks));
    }

    #[test]
    fn content_extraction() {
        let ok = json!({"choices": [{"message": {"role": "assistant", "content": "hi"}}]});
        assert_eq!(extract_content(&ok).unwrap(), "hi");
        assert!(extract_content(&json!({"choices": []})).is_err());
    }

    #[test]
    fn scripted_config_requires_path() {
        let mut cfg = LlmConfig::generator();
        cfg.backend = LlmBackendKind::Scripted;
        assert!(cfg.build().is_err());
        let mut cfg = LlmConfig::generator();
        cfg.temperature = -1.0;
        assert!(cfg.validate().is_err());
    }
}
